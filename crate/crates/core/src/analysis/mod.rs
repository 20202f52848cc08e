//! Quantitative evaluation of shields under uniformly random inputs.
//!
//! Every letter over `I ∪ O` is drawn with probability `2^−|I∪O|`. The joint
//! behaviour of shield, SSE monitor and a property monitor is then a
//! finite DTMC, whose long-run probability of acceptance is the expected
//! value of the property. Latency is the longest interval satisfying a
//! prefix-closed property along any execution.

mod linalg;

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::time::Instant;

use num::{BigInt, BigRational};
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automata::{compile, Dfa, StateId};
use crate::error::{Error, Result};
use crate::qddc::{builtin_macros, parse_with, Qddc};
use crate::runtime::{ExecState, ShieldExecution, StepOutput};
use crate::synthesis::Arith;

use linalg::{residual, to_f64, Scalar, System};

/// `true^<!Deviation>`: the shield agrees with the SSE at the current step.
pub const NON_DEVIATION: &str = "true^<!Deviation>";
/// `[[SSEOK && Deviation]]`: a burst of deviations while the SSE is correct.
pub const BURST: &str = "[[SSEOK && Deviation]]";

/// Parses a property over the execution's extended alphabet.
pub fn property(exec: &ShieldExecution, text: &str) -> Result<Qddc> {
    parse_with(text, &exec.extended_vars(), &builtin_macros())
}

/// Compiles `d` over the extended alphabet.
pub fn monitor(exec: &ShieldExecution, d: &Qddc) -> Result<Dfa> {
    compile(d, &exec.extended_vars())
}

/// Discrete-time Markov chain with dyadic transition probabilities.
#[derive(Clone, Debug)]
pub struct Dtmc {
    /// (execution state, property monitor state); for a lumped chain, the
    /// representative of each block.
    pub states: Vec<(ExecState, StateId)>,
    pub init: usize,
    /// `2^|I∪O|`; a move's probability is its count divided by this.
    pub denom: u64,
    /// `rows[s]` lists `(target, count)` with distinct targets.
    pub rows: Vec<Vec<(usize, u64)>>,
    pub accepting: Vec<bool>,
}

pub fn build_dtmc(exec: &ShieldExecution, d: &Qddc) -> Result<Dtmc> {
    build_dtmc_with(exec, &monitor(exec, d)?)
}

/// `mon` is over the extended alphabet or a subset of it.
pub fn build_dtmc_with(exec: &ShieldExecution, mon: &Dfa) -> Result<Dtmc> {
    let ext = exec.extended_vars();
    let mon = if mon.vars() == &ext { mon.clone() } else { mon.lift(&ext)? };
    let ni = exec.io().num_inputs();
    let start = (exec.init(), mon.init());
    let mut index: HashMap<(ExecState, StateId), usize> = HashMap::from([(start, 0)]);
    let mut states = vec![start];
    let mut rows = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let (e, q) = states[i];
        let mut row: Vec<(usize, u64)> = Vec::new();
        for input in 0..ni {
            let (e2, out) = exec.step(e, input);
            let key = (e2, mon.next(q, exec.extended_letter(&out)));
            let t = *index.entry(key).or_insert_with(|| {
                states.push(key);
                states.len() - 1
            });
            match row.iter_mut().find(|(u, _)| *u == t) {
                Some((_, c)) => *c += 1,
                None => row.push((t, 1)),
            }
        }
        row.sort_unstable();
        rows.push(row);
        i += 1;
    }
    let accepting = states.iter().map(|&(_, q)| mon.is_accepting(q)).collect();
    Ok(Dtmc {
        states,
        init: 0,
        denom: ni as u64,
        rows,
        accepting,
    })
}

impl Dtmc {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn probability(&self, s: usize, t: usize) -> BigRational {
        let c = self.rows[s].iter().find(|&&(u, _)| u == t).map_or(0, |&(_, c)| c);
        BigRational::new(BigInt::from(c), BigInt::from(self.denom))
    }

    /// Same chain with every label flipped.
    pub fn complement(&self) -> Dtmc {
        Dtmc {
            accepting: self.accepting.iter().map(|a| !a).collect(),
            ..self.clone()
        }
    }

    /// Quotient by the coarsest label-respecting probabilistic bisimulation;
    /// long-run acceptance is preserved.
    pub fn lump(&self) -> Dtmc {
        let n = self.num_states();
        let mut class: Vec<usize> = self.accepting.iter().map(|&a| a as usize).collect();
        let mut count = 0;
        loop {
            let mut ids: HashMap<(usize, Vec<(usize, u64)>), usize> = HashMap::new();
            let next: Vec<usize> = (0..n)
                .map(|s| {
                    let mut sig: Vec<(usize, u64)> = Vec::new();
                    for &(t, c) in &self.rows[s] {
                        match sig.iter_mut().find(|(k, _)| *k == class[t]) {
                            Some((_, x)) => *x += c,
                            None => sig.push((class[t], c)),
                        }
                    }
                    sig.sort_unstable();
                    let len = ids.len();
                    *ids.entry((class[s], sig)).or_insert(len)
                })
                .collect();
            let k = ids.len();
            class = next;
            if k == count {
                break;
            }
            count = k;
        }
        let mut rep = vec![usize::MAX; count];
        for s in 0..n {
            if rep[class[s]] == usize::MAX {
                rep[class[s]] = s;
            }
        }
        let rows = rep
            .iter()
            .map(|&s| {
                let mut row: Vec<(usize, u64)> = Vec::new();
                for &(t, c) in &self.rows[s] {
                    match row.iter_mut().find(|(k, _)| *k == class[t]) {
                        Some((_, x)) => *x += c,
                        None => row.push((class[t], c)),
                    }
                }
                row.sort_unstable();
                row
            })
            .collect();
        Dtmc {
            states: rep.iter().map(|&s| self.states[s]).collect(),
            init: class[self.init],
            denom: self.denom,
            rows,
            accepting: rep.iter().map(|&s| self.accepting[s]).collect(),
        }
    }

    /// Bottom strongly connected components.
    pub fn bsccs(&self) -> Vec<Vec<usize>> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.num_states(), self.num_transitions());
        let nodes: Vec<_> = (0..self.num_states()).map(|_| g.add_node(())).collect();
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, _) in row {
                g.add_edge(nodes[s], nodes[t], ());
            }
        }
        let mut comp = vec![usize::MAX; self.num_states()];
        let sccs = petgraph::algo::tarjan_scc(&g);
        for (k, scc) in sccs.iter().enumerate() {
            for v in scc {
                comp[v.index()] = k;
            }
        }
        sccs.into_iter()
            .enumerate()
            .filter(|(k, scc)| {
                scc.iter()
                    .all(|v| self.rows[v.index()].iter().all(|&(t, _)| comp[t] == *k))
            })
            .map(|(_, scc)| {
                let mut b: Vec<usize> = scc.into_iter().map(|v| v.index()).collect();
                b.sort_unstable();
                b
            })
            .collect()
    }

    /// MRMC `.tra` and `.lab` files (1-based states, exact decimals).
    pub fn to_mrmc(&self) -> (String, String) {
        let bits = self.denom.trailing_zeros();
        let mut tra = String::new();
        let _ = writeln!(tra, "STATES {}", self.num_states());
        let _ = writeln!(tra, "TRANSITIONS {}", self.num_transitions());
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, c) in row {
                let _ = writeln!(tra, "{} {} {}", s + 1, t + 1, dyadic_decimal(c, bits));
            }
        }
        let mut lab = String::from("#DECLARATION\naccepting\n#END\n");
        for (s, &a) in self.accepting.iter().enumerate() {
            if a {
                let _ = writeln!(lab, "{} accepting", s + 1);
            }
        }
        (tra, lab)
    }
}

/// `c / 2^k` written out exactly in decimal.
fn dyadic_decimal(c: u64, k: u32) -> String {
    if k == 0 {
        return c.to_string();
    }
    let scaled = c as u128 * 5u128.pow(k);
    let ten = 10u128.pow(k);
    let frac = format!("{:0width$}", scaled % ten, width = k as usize);
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        (scaled / ten).to_string()
    } else {
        format!("{}.{frac}", scaled / ten)
    }
}

/// Long-run acceptance probability.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedValue {
    pub value: f64,
    /// Present in exact mode.
    pub exact: Option<BigRational>,
}

impl fmt::Display for ExpectedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.7}", self.value)
    }
}

const FLOAT_RESIDUAL: f64 = 1e-12;

/// Reachability-weighted average over the BSCCs of each BSCC's stationary
/// acceptance mass.
pub fn expected_value(m: &Dtmc, arith: Arith) -> Result<ExpectedValue> {
    let m = m.lump();
    match arith {
        Arith::Exact => {
            let v = solve_long_run::<BigRational>(&m, |_| Ok(()))?;
            Ok(ExpectedValue {
                value: to_f64(&v),
                exact: Some(v),
            })
        }
        Arith::Float => {
            let v = solve_long_run::<f64>(&m, |(sys, x)| {
                let r = residual(sys, x);
                if r < FLOAT_RESIDUAL {
                    Ok(())
                } else {
                    Err(Error::Integrity(format!("float solve residual {r:e} exceeds {FLOAT_RESIDUAL:e}")))
                }
            })?;
            Ok(ExpectedValue {
                value: v,
                exact: None,
            })
        }
    }
}

fn singular() -> Error {
    Error::Integrity("singular linear system in steady-state analysis".into())
}

fn solve_long_run<F: Scalar>(m: &Dtmc, check: impl Fn((&System<F>, &[F])) -> Result<()>) -> Result<F> {
    let n = m.num_states();
    let d = F::from_int(m.denom as i64);
    let bsccs = m.bsccs();
    let mut value: Vec<Option<F>> = vec![None; n];
    for b in &bsccs {
        let local: HashMap<usize, usize> = b.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let k = b.len();
        // Balance equations for all but the last state, then normalization.
        let mut sys = System::<F>::new(k);
        for (ks, &s) in b.iter().enumerate() {
            for &(t, c) in &m.rows[s] {
                let kt = local[&t];
                if kt + 1 < k {
                    sys.add(kt, ks, F::from_int(c as i64));
                }
            }
            if ks + 1 < k {
                sys.add(ks, ks, F::zero().sub(&d));
            }
            sys.add(k - 1, ks, F::from_int(1));
        }
        sys.rhs[k - 1] = F::from_int(1);
        let pi = sys.clone().solve().ok_or_else(singular)?;
        check((&sys, &pi))?;
        let mass = b
            .iter()
            .zip(&pi)
            .filter(|(&s, _)| m.accepting[s])
            .fold(F::zero(), |acc, (_, p)| acc.add(p));
        for &s in b {
            value[s] = Some(mass.clone());
        }
    }
    if let Some(v) = &value[m.init] {
        return Ok(v.clone());
    }
    let transient: Vec<usize> = (0..n).filter(|&s| value[s].is_none()).collect();
    let local: HashMap<usize, usize> = transient.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let mut sys = System::<F>::new(transient.len());
    for (ks, &s) in transient.iter().enumerate() {
        sys.add(ks, ks, d.clone());
        for &(t, c) in &m.rows[s] {
            let c = F::from_int(c as i64);
            match &value[t] {
                Some(v) => sys.rhs[ks] = sys.rhs[ks].add(&c.mul(v)),
                None => sys.add(ks, local[&t], F::zero().sub(&c)),
            }
        }
    }
    let y = sys.clone().solve().ok_or_else(singular)?;
    check((&sys, &y))?;
    Ok(y[local[&m.init]].clone())
}

/// Longest interval satisfying a property.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatencyResult {
    Finite(u64),
    Infinite,
    /// No interval satisfies the property.
    Undefined,
}

impl LatencyResult {
    /// Number of positions in the longest satisfying interval: `n + 1` for
    /// `Finite(n)`, 0 when undefined, `None` when unbounded. This is the
    /// "how many consecutive cycles" reading of latency.
    pub fn positions(self) -> Option<u64> {
        match self {
            LatencyResult::Finite(n) => Some(n + 1),
            LatencyResult::Undefined => Some(0),
            LatencyResult::Infinite => None,
        }
    }
}

impl fmt::Display for LatencyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatencyResult::Finite(n) => write!(f, "{n}"),
            LatencyResult::Infinite => write!(f, "inf"),
            LatencyResult::Undefined => write!(f, "undefined"),
        }
    }
}

/// An execution reaching a longest satisfying interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    /// Inputs driving the shield from its initial state to the interval start.
    pub prefix: Vec<usize>,
    /// Inputs read inside the interval (`len = n + 1` for `Finite(n)`).
    pub interval: Vec<usize>,
}

pub fn maxlen(exec: &ShieldExecution, d: &Qddc) -> Result<LatencyResult> {
    Ok(maxlen_witness(exec, d)?.0)
}

/// Latency plus a witness when finite.
pub fn maxlen_witness(exec: &ShieldExecution, d: &Qddc) -> Result<(LatencyResult, Option<Witness>)> {
    let mon = monitor(exec, d)?;
    if !mon.is_prefix_closed() {
        return Err(Error::NotPrefixClosed);
    }
    let ni = exec.io().num_inputs();
    let reach = exec.reachable();
    let index: HashMap<ExecState, usize> = reach.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let succ: Vec<Vec<(usize, StepOutput)>> = reach
        .iter()
        .map(|&s| (0..ni).map(|i| {
            let (t, out) = exec.step(s, i);
            (index[&t], out)
        }).collect())
        .collect();
    let nq = mon.num_states();
    let node = |e: usize, q: StateId| e * nq + q;
    // longest[v] = edges on the longest valid path from v; colour 1 = open.
    let mut longest: Vec<Option<u64>> = vec![None; reach.len() * nq];
    let mut best_edge: Vec<Option<usize>> = vec![None; reach.len() * nq];
    let mut open = vec![false; reach.len() * nq];
    for e0 in 0..reach.len() {
        let root = node(e0, mon.init());
        if longest[root].is_some() {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        open[root] = true;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            let (e, q) = (v / nq, v % nq);
            if *i < ni {
                let input = *i;
                *i += 1;
                let (t_e, out) = succ[e][input];
                let q2 = mon.next(q, exec.extended_letter(&out));
                if !mon.is_accepting(q2) {
                    continue;
                }
                let w = node(t_e, q2);
                if open[w] {
                    return Ok((LatencyResult::Infinite, None));
                }
                if longest[w].is_none() {
                    open[w] = true;
                    stack.push((w, 0));
                }
                continue;
            }
            let mut best = 0;
            for input in 0..ni {
                let (t_e, out) = succ[e][input];
                let q2 = mon.next(q, exec.extended_letter(&out));
                if mon.is_accepting(q2) {
                    let len = 1 + longest[node(t_e, q2)].expect("finished");
                    if len > best {
                        best = len;
                        best_edge[v] = Some(input);
                    }
                }
            }
            longest[v] = Some(best);
            open[v] = false;
            stack.pop();
        }
    }
    let (e0, m) = (0..reach.len())
        .map(|e| (e, longest[node(e, mon.init())].expect("visited")))
        .max_by_key(|&(e, m)| (m, std::cmp::Reverse(e)))
        .expect("initial state is reachable");
    if m == 0 {
        return Ok((LatencyResult::Undefined, None));
    }
    let mut interval = Vec::new();
    let mut v = node(e0, mon.init());
    while let Some(input) = best_edge[v] {
        interval.push(input);
        let (t_e, out) = succ[v / nq][input];
        v = node(t_e, mon.next(v % nq, exec.extended_letter(&out)));
    }
    let witness = Witness {
        prefix: path_to(&succ, e0),
        interval,
    };
    Ok((LatencyResult::Finite(m - 1), Some(witness)))
}

/// Shortest input sequence from state 0 to `target` in a BFS-indexed graph.
fn path_to(succ: &[Vec<(usize, StepOutput)>], target: usize) -> Vec<usize> {
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; succ.len()];
    let mut queue = std::collections::VecDeque::from([0]);
    let mut seen = vec![false; succ.len()];
    seen[0] = true;
    while let Some(s) = queue.pop_front() {
        if s == target {
            break;
        }
        for (i, &(t, _)) in succ[s].iter().enumerate() {
            if !seen[t] {
                seen[t] = true;
                parent[t] = Some((s, i));
                queue.push_back(t);
            }
        }
    }
    let mut path = Vec::new();
    let mut v = target;
    while let Some((p, i)) = parent[v] {
        path.push(i);
        v = p;
    }
    path.reverse();
    path
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimStats {
    pub steps: u64,
    pub deviations: u64,
    pub sse_ok: u64,
    /// Standard error of the non-deviation frequency by batch means.
    pub std_error: f64,
}

impl SimStats {
    pub fn non_deviation(&self) -> f64 {
        1.0 - self.deviations as f64 / self.steps as f64
    }

    pub fn sse_ok_frequency(&self) -> f64 {
        self.sse_ok as f64 / self.steps as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimStep {
    pub input: usize,
    pub out: StepOutput,
}

const BATCHES: u64 = 100;

/// Drives the shield with uniform letters over `I ∪ O` from a seeded
/// generator; `sink` sees every step.
pub fn simulate_with(exec: &ShieldExecution, steps: u64, seed: u64, mut sink: impl FnMut(SimStep)) -> Result<SimStats> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ni = exec.io().num_inputs();
    let batches = BATCHES.min(steps);
    let size = steps / batches;
    let mut state = exec.init();
    let (mut dev, mut ok) = (0u64, 0u64);
    let mut batch_dev = 0u64;
    let mut means = Vec::with_capacity(batches as usize);
    for k in 0..steps {
        let input = rng.random_range(0..ni);
        let (next, out) = exec.step(state, input);
        state = next;
        dev += out.deviation as u64;
        ok += out.sse_ok as u64;
        batch_dev += out.deviation as u64;
        if (k + 1) % size == 0 && (means.len() as u64) < batches {
            means.push(1.0 - batch_dev as f64 / size as f64);
            batch_dev = 0;
        }
        sink(SimStep { input, out });
    }
    let b = means.len() as f64;
    let std_error = if means.len() < 2 {
        f64::NAN
    } else {
        let mean = means.iter().sum::<f64>() / b;
        let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0);
        (var / b).sqrt()
    };
    Ok(SimStats {
        steps,
        deviations: dev,
        sse_ok: ok,
        std_error,
    })
}

pub fn simulate(exec: &ShieldExecution, steps: u64, seed: u64) -> Result<SimStats> {
    simulate_with(exec, steps, seed, |_| {})
}

pub fn simulate_trace(exec: &ShieldExecution, steps: u64, seed: u64) -> Result<(Vec<SimStep>, SimStats)> {
    let mut trace = Vec::with_capacity(steps.min(1 << 24) as usize);
    let stats = simulate_with(exec, steps, seed, |s| trace.push(s))?;
    Ok((trace, stats))
}

/// The standard metrics of a shield.
#[derive(Clone, Debug)]
pub struct Report {
    pub controller_states: usize,
    /// States of [`ShieldExecution::monitored_dfa`].
    pub monitored_states: usize,
    pub dtmc_states: usize,
    pub lumped_states: usize,
    pub expected: ExpectedValue,
    pub latency: LatencyResult,
    pub seconds: f64,
}

pub fn analyze(exec: &ShieldExecution, arith: Arith) -> Result<Report> {
    let start = Instant::now();
    let m = build_dtmc(exec, &property(exec, NON_DEVIATION)?)?;
    let expected = expected_value(&m, arith)?;
    let latency = maxlen(exec, &property(exec, BURST)?)?;
    Ok(Report {
        controller_states: exec.controller.num_states(),
        monitored_states: exec.monitored_dfa(crate::automata::DEFAULT_MAX_STATES)?.num_states(),
        dtmc_states: m.num_states(),
        lumped_states: m.lump().num_states(),
        expected,
        latency,
        seconds: start.elapsed().as_secs_f64(),
    })
}

impl Report {
    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "controller_states={}", self.controller_states);
        let _ = writeln!(s, "monitored_states={}", self.monitored_states);
        let _ = writeln!(s, "dtmc_states={}", self.dtmc_states);
        let _ = writeln!(s, "lumped_states={}", self.lumped_states);
        let _ = writeln!(s, "expected_value={:.7}", self.expected.value);
        if let Some(r) = &self.expected.exact {
            let _ = writeln!(s, "expected_value_exact={r}");
        }
        let _ = writeln!(s, "latency={}", self.latency);
        match self.latency.positions() {
            Some(p) => {
                let _ = writeln!(s, "burst_positions={p}");
            }
            None => s.push_str("burst_positions=inf\n"),
        }
        let _ = writeln!(s, "analysis_seconds={:.3}", self.seconds);
        s
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "controller states   {}", self.controller_states)?;
        writeln!(f, "with monitor bits   {}", self.monitored_states)?;
        writeln!(f, "DTMC states         {} ({} lumped)", self.dtmc_states, self.lumped_states)?;
        writeln!(f, "expected value      {:.7}", self.expected.value)?;
        let burst = self.latency.positions().map_or("inf".to_string(), |p| p.to_string());
        writeln!(f, "latency (maxlen)    {} ({burst} consecutive steps)", self.latency)?;
        write!(f, "analysis time       {:.3}s", self.seconds)
    }
}

#[cfg(test)]
mod tests;
