//! Safety games over automata: maximally permissive supervisors, H-optimal
//! pruning against soft requirements, and determinization by output order.
//!
//! A [`Supervisor`] is a DFA over `inputs ∪ outputs` with a single absorbing
//! non-accepting `reject` state; every other state is accepting. A transition
//! is *allowed* when it avoids `reject`.

mod values;

use std::fmt;

use crate::automata::{compile, Dfa, StateId};
use crate::error::{Error, Result};
use crate::prop::{PropFormula, VarSet};
use crate::qddc::Qddc;

pub use values::{Arith, ValueTable};

/// Split of an ambient variable set into environment inputs and controlled
/// outputs. Ambient variables named in neither list are treated as inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IoPartition {
    vars: VarSet,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    /// `join[i * n_out + o]` is the ambient letter.
    join: Vec<u32>,
    /// `split[letter] = (i, o)`.
    split: Vec<(u32, u32)>,
}

impl IoPartition {
    pub fn new(vars: &VarSet, inputs: &[&str], outputs: &[&str]) -> Result<Self> {
        vars.check_capacity()?;
        let pos = |n: &&str| vars.position(n).ok_or_else(|| Error::UndeclaredVariable(n.to_string()));
        let mut ins: Vec<usize> = inputs.iter().map(pos).collect::<Result<_>>()?;
        let outs: Vec<usize> = outputs.iter().map(pos).collect::<Result<_>>()?;
        for (k, o) in outs.iter().enumerate() {
            if ins.contains(o) || outs[..k].contains(o) {
                return Err(Error::DuplicateVariable(vars.name(*o).to_string()));
            }
        }
        for (k, i) in ins.iter().enumerate() {
            if ins[..k].contains(i) {
                return Err(Error::DuplicateVariable(vars.name(*i).to_string()));
            }
        }
        for v in 0..vars.len() {
            if !ins.contains(&v) && !outs.contains(&v) {
                ins.push(v);
            }
        }
        let (ni, no) = (1usize << ins.len(), 1usize << outs.len());
        let mut join = vec![0u32; ni * no];
        let mut split = vec![(0u32, 0u32); vars.alphabet_size()];
        for i in 0..ni {
            for o in 0..no {
                let mut letter = 0;
                for (k, &v) in ins.iter().enumerate() {
                    letter = vars.with_bit(letter, v, (i >> (ins.len() - 1 - k)) & 1 == 1);
                }
                for (k, &v) in outs.iter().enumerate() {
                    letter = vars.with_bit(letter, v, (o >> (outs.len() - 1 - k)) & 1 == 1);
                }
                join[i * no + o] = letter as u32;
                split[letter] = (i as u32, o as u32);
            }
        }
        Ok(IoPartition {
            vars: vars.clone(),
            inputs: ins,
            outputs: outs,
            join,
            split,
        })
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn input_names(&self) -> Vec<&str> {
        self.inputs.iter().map(|&v| self.vars.name(v)).collect()
    }

    pub fn output_names(&self) -> Vec<&str> {
        self.outputs.iter().map(|&v| self.vars.name(v)).collect()
    }

    pub fn num_inputs(&self) -> usize {
        1 << self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        1 << self.outputs.len()
    }

    #[inline]
    pub fn join(&self, input: usize, output: usize) -> usize {
        self.join[input * self.num_outputs() + output] as usize
    }

    #[inline]
    pub fn split(&self, letter: usize) -> (usize, usize) {
        let (i, o) = self.split[letter];
        (i as usize, o as usize)
    }

    /// Output letter index from output-variable values in output order.
    pub fn output_from_bits(&self, bits: &[bool]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn output_bit(&self, output: usize, k: usize) -> bool {
        (output >> (self.outputs.len() - 1 - k)) & 1 == 1
    }
}

/// Output-nondeterministic Mealy machine encoded as a DFA with a reject sink.
#[derive(Clone, Debug)]
pub struct Supervisor {
    dfa: Dfa,
    io: IoPartition,
    reject: StateId,
}

impl Supervisor {
    /// Wraps a DFA whose non-accepting states are all dead. The result is
    /// minimized, so they collapse into one reject sink; an unreachable sink
    /// is added if none exists.
    pub fn from_dfa(dfa: Dfa, io: IoPartition) -> Result<Supervisor> {
        if dfa.vars() != io.vars() {
            return Err(Error::AlphabetMismatch(format!(
                "automaton over [{}], partition over [{}]",
                dfa.vars(),
                io.vars()
            )));
        }
        let m = dfa.minimize();
        let rejects: Vec<StateId> = (0..m.num_states()).filter(|&q| !m.is_accepting(q)).collect();
        let (dfa, reject) = match rejects.as_slice() {
            [] => {
                let n = m.num_states();
                let k = m.alphabet_size();
                let mut delta: Vec<u32> = (0..n).flat_map(|q| m.row(q).to_vec()).collect();
                delta.extend(std::iter::repeat_n(n as u32, k));
                let mut acc = vec![true; n];
                acc.push(false);
                (Dfa::from_parts(m.vars().clone(), m.init(), acc, delta)?, n)
            }
            [r] if m.row(*r).iter().all(|&t| t as usize == *r) => (m, *r),
            _ => {
                return Err(Error::Integrity(
                    "supervisor must have exactly one absorbing non-accepting state".into(),
                ))
            }
        };
        Ok(Supervisor { dfa, io, reject })
    }

    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }

    pub fn io(&self) -> &IoPartition {
        &self.io
    }

    pub fn reject(&self) -> StateId {
        self.reject
    }

    pub fn init(&self) -> StateId {
        self.dfa.init()
    }

    /// States other than the reject sink.
    pub fn num_states(&self) -> usize {
        self.dfa.num_states() - 1
    }

    #[inline]
    pub fn next(&self, q: StateId, input: usize, output: usize) -> StateId {
        self.dfa.next(q, self.io.join(input, output))
    }

    /// Allowed `(output, successor)` pairs for `input` at `q`.
    pub fn allowed(&self, q: StateId, input: usize) -> impl Iterator<Item = (usize, StateId)> + '_ {
        (0..self.io.num_outputs())
            .map(move |o| (o, self.next(q, input, o)))
            .filter(move |&(_, t)| t != self.reject)
    }

    fn live_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.dfa.reachable().into_iter().filter(move |&q| q != self.reject)
    }

    /// Every reachable live state offers an allowed output for every input.
    pub fn is_non_blocking(&self) -> bool {
        self.live_states()
            .all(|q| (0..self.io.num_inputs()).all(|i| self.allowed(q, i).next().is_some()))
    }

    /// Every reachable live state offers exactly one output per input.
    pub fn is_deterministic(&self) -> bool {
        self.live_states()
            .all(|q| (0..self.io.num_inputs()).all(|i| self.allowed(q, i).count() == 1))
    }

    /// Removes every transition for which `keep` is false, then re-minimizes.
    fn restrict(&self, keep: impl Fn(StateId, usize, usize) -> bool) -> Result<Supervisor> {
        let n = self.dfa.num_states();
        let k = self.dfa.alphabet_size();
        let mut delta = Vec::with_capacity(n * k);
        for q in 0..n {
            for a in 0..k {
                let t = self.dfa.next(q, a);
                let (i, o) = self.io.split(a);
                delta.push(if q != self.reject && t != self.reject && keep(q, i, o) {
                    t as u32
                } else {
                    self.reject as u32
                });
            }
        }
        let acc = (0..n).map(|q| q != self.reject).collect();
        let dfa = Dfa::from_parts(self.dfa.vars().clone(), self.dfa.init(), acc, delta)?;
        Supervisor::from_dfa(dfa, self.io.clone())
    }
}

/// A deterministic supervisor.
#[derive(Clone, Debug)]
pub struct Controller {
    sup: Supervisor,
    /// `table[q * n_in + i] = (output, next)`; meaningless for the reject row.
    table: Vec<(u32, u32)>,
}

impl Controller {
    pub fn from_supervisor(sup: Supervisor) -> Result<Controller> {
        if !sup.is_deterministic() {
            return Err(Error::Integrity("supervisor is not output-deterministic".into()));
        }
        let ni = sup.io.num_inputs();
        let mut table = vec![(0, sup.reject as u32); sup.dfa.num_states() * ni];
        for q in sup.live_states() {
            for i in 0..ni {
                let (o, t) = sup.allowed(q, i).next().expect("deterministic");
                table[q * ni + i] = (o as u32, t as u32);
            }
        }
        Ok(Controller { sup, table })
    }

    pub fn supervisor(&self) -> &Supervisor {
        &self.sup
    }

    pub fn io(&self) -> &IoPartition {
        &self.sup.io
    }

    pub fn init(&self) -> StateId {
        self.sup.init()
    }

    pub fn num_states(&self) -> usize {
        self.sup.num_states()
    }

    /// Live states in BFS order from the initial state.
    pub fn states(&self) -> Vec<StateId> {
        self.sup.live_states().collect()
    }

    /// The chosen output and successor for `input` at live state `q`.
    #[inline]
    pub fn step(&self, q: StateId, input: usize) -> (usize, StateId) {
        let (o, t) = self.table[q * self.sup.io.num_inputs() + input];
        (o as usize, t as usize)
    }

    pub fn equivalent(&self, other: &Controller) -> Result<bool> {
        self.sup.dfa.equivalent(&other.sup.dfa)
    }
}

/// Why synthesis failed: the hard requirement's winning region misses the
/// initial state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unrealizable {
    /// Reachable accepting states of the hard automaton outside the winning
    /// region.
    pub losing: Vec<StateId>,
    pub hard_states: usize,
}

impl fmt::Display for Unrealizable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unrealizable: {} of {} automaton states are losing",
            self.losing.len(),
            self.hard_states
        )
    }
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum MpsOutcome {
    Realizable(Supervisor),
    Unrealizable(Unrealizable),
}

impl MpsOutcome {
    pub fn supervisor(self) -> Option<Supervisor> {
        match self {
            MpsOutcome::Realizable(s) => Some(s),
            MpsOutcome::Unrealizable(_) => None,
        }
    }
}

/// Maximally permissive supervisor keeping the run inside the accepting
/// states of `hard` forever.
pub fn mps(hard: &Dfa, io: &IoPartition) -> Result<MpsOutcome> {
    if hard.vars() != io.vars() {
        return Err(Error::AlphabetMismatch(format!(
            "automaton over [{}], partition over [{}]",
            hard.vars(),
            io.vars()
        )));
    }
    let n = hard.num_states();
    let (ni, no) = (io.num_inputs(), io.num_outputs());
    let mut win: Vec<bool> = (0..n).map(|q| hard.is_accepting(q)).collect();
    let controllable = |q: StateId, win: &[bool]| {
        (0..ni).all(|i| (0..no).any(|o| win[hard.next(q, io.join(i, o))]))
    };
    loop {
        let mut changed = false;
        for q in 0..n {
            if win[q] && !controllable(q, &win) {
                win[q] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let init = hard.init();
    // The empty prefix need not satisfy `hard`, only every non-empty one.
    let init_wins = if hard.is_accepting(init) { win[init] } else { controllable(init, &win) };
    if !init_wins {
        let losing = hard
            .reachable()
            .into_iter()
            .filter(|&q| hard.is_accepting(q) && !win[q])
            .collect();
        return Ok(MpsOutcome::Unrealizable(Unrealizable { losing, hard_states: n }));
    }
    // states 0..n as in `hard`, n = fresh initial copy, n+1 = reject
    let k = hard.alphabet_size();
    let (start, reject) = (n, n + 1);
    let mut delta = Vec::with_capacity((n + 2) * k);
    let mut acc = Vec::with_capacity(n + 2);
    for (idx, q) in (0..n).chain([init]).enumerate() {
        let live = win[q] || idx == start;
        for a in 0..k {
            let t = hard.next(q, a);
            delta.push(if live && win[t] { t as u32 } else { reject as u32 });
        }
        acc.push(live);
    }
    delta.extend(std::iter::repeat_n(reject as u32, k));
    acc.push(false);
    let dfa = Dfa::from_parts(hard.vars().clone(), start, acc, delta)?;
    Ok(MpsOutcome::Realizable(Supervisor::from_dfa(dfa, io.clone())?))
}

#[derive(Clone, Debug)]
pub struct SoftReq {
    pub formula: Qddc,
    pub weight: u64,
}

/// Weighted soft requirements; a transition earns the weight of every
/// formula that holds on the prefix ending with it.
#[derive(Clone, Debug, Default)]
pub struct SoftSpec {
    pub reqs: Vec<SoftReq>,
}

impl SoftSpec {
    pub fn new(reqs: impl IntoIterator<Item = (Qddc, u64)>) -> Self {
        SoftSpec {
            reqs: reqs.into_iter().map(|(formula, weight)| SoftReq { formula, weight }).collect(),
        }
    }
}

/// Supervisor pruned to H-optimal outputs, with the value table used.
pub struct Mphos {
    pub supervisor: Supervisor,
    pub values: ValueTable,
}

/// H-optimal sub-supervisor of `sup` for `soft`: per state and input, keeps
/// exactly the outputs maximising current weight plus `V_H` of the
/// successor. All ties are kept.
pub fn mphos(sup: &Supervisor, soft: &SoftSpec, horizon: usize, arith: Arith) -> Result<Mphos> {
    let vars = sup.io.vars().clone();
    let mut letter_weights = vec![0u64; vars.alphabet_size()];
    let mut monitors: Vec<(Dfa, u64)> = Vec::new();
    for r in &soft.reqs {
        if r.weight == 0 {
            continue;
        }
        match r.formula.as_last_letter() {
            Some(phi) => {
                let t = phi.truth_table(&vars)?;
                for (w, holds) in letter_weights.iter_mut().zip(t) {
                    *w += r.weight * holds as u64;
                }
            }
            None => monitors.push((compile(&r.formula, &vars)?, r.weight)),
        }
    }
    let arena = Arena::build(sup, &monitors, &letter_weights)?;
    let values = values::iterate(&arena, sup.io.num_inputs(), sup.io.num_outputs(), horizon, arith);
    let keep = values::optimal_moves(&arena, &values, sup.io.num_inputs(), sup.io.num_outputs());
    let supervisor = arena.restrict(sup, &keep)?;
    Ok(Mphos {
        supervisor,
        values: ValueTable {
            horizon,
            values: values.to_rational(),
            states: arena.sup_state.clone(),
        },
    })
}

/// Product of a supervisor with soft-requirement monitors, as a weighted
/// game arena. State 0 is the initial state; `dead` marks the reject sink.
pub(crate) struct Arena {
    /// `succ[s * k + a]`, `u32::MAX` if the move leads to reject.
    pub succ: Vec<u32>,
    pub weight: Vec<u64>,
    pub sup_state: Vec<StateId>,
    pub k: usize,
    io: IoPartition,
}

impl Arena {
    fn build(sup: &Supervisor, monitors: &[(Dfa, u64)], letter_weights: &[u64]) -> Result<Arena> {
        let k = sup.dfa.alphabet_size();
        let key0 = (sup.init(), monitors.iter().map(|(m, _)| m.init()).collect::<Vec<_>>());
        let mut ids = std::collections::HashMap::new();
        let mut keys = vec![key0.clone()];
        ids.insert(key0, 0u32);
        let (mut succ, mut weight) = (Vec::new(), Vec::new());
        let mut i = 0;
        while i < keys.len() {
            let (s, ms) = keys[i].clone();
            for a in 0..k {
                let t = sup.dfa.next(s, a);
                if t == sup.reject {
                    succ.push(u32::MAX);
                    weight.push(0);
                    continue;
                }
                let ms2: Vec<StateId> = ms.iter().zip(monitors).map(|(&m, (d, _))| d.next(m, a)).collect();
                let w = letter_weights[a]
                    + ms2
                        .iter()
                        .zip(monitors)
                        .map(|(&m, (d, w))| if d.is_accepting(m) { *w } else { 0 })
                        .sum::<u64>();
                let key = (t, ms2);
                let id = *ids.entry(key.clone()).or_insert_with(|| {
                    keys.push(key);
                    (keys.len() - 1) as u32
                });
                succ.push(id);
                weight.push(w);
            }
            i += 1;
        }
        Ok(Arena {
            succ,
            weight,
            sup_state: keys.iter().map(|(s, _)| *s).collect(),
            k,
            io: sup.io.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.sup_state.len()
    }

    pub fn letter(&self, i: usize, o: usize) -> usize {
        self.io.join(i, o)
    }

    #[inline]
    pub fn mv(&self, s: usize, i: usize, o: usize) -> Option<(usize, u64)> {
        let a = self.io.join(i, o);
        let t = self.succ[s * self.k + a];
        (t != u32::MAX).then(|| (t as usize, self.weight[s * self.k + a]))
    }

    fn restrict(&self, sup: &Supervisor, keep: &[bool]) -> Result<Supervisor> {
        let n = self.len();
        let reject = n as u32;
        let mut delta = Vec::with_capacity((n + 1) * self.k);
        for s in 0..n {
            for a in 0..self.k {
                let t = self.succ[s * self.k + a];
                delta.push(if t == u32::MAX || !keep[s * self.k + a] { reject } else { t });
            }
        }
        delta.extend(std::iter::repeat_n(reject, self.k));
        let mut acc = vec![true; n];
        acc.push(false);
        let dfa = Dfa::from_parts(sup.dfa.vars().clone(), 0, acc, delta)?;
        Supervisor::from_dfa(dfa, sup.io.clone())
    }
}

/// Lexicographic preference over output literals. Ambient outputs not
/// mentioned prefer `false`, in partition order, after all listed literals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputOrder {
    pub literals: Vec<(String, bool)>,
}

impl OutputOrder {
    pub fn new(literals: impl IntoIterator<Item = (String, bool)>) -> Result<Self> {
        let literals: Vec<(String, bool)> = literals.into_iter().collect();
        for (k, (v, _)) in literals.iter().enumerate() {
            if literals[..k].iter().any(|(w, _)| w == v) {
                return Err(Error::DuplicateVariable(v.clone()));
            }
        }
        Ok(OutputOrder { literals })
    }

    /// Parses a whitespace-separated literal list such as `!q' !p'`; `>` and
    /// commas between literals are accepted as separators.
    pub fn parse(text: &str) -> Result<Self> {
        let lits = text
            .split(|c: char| c.is_whitespace() || c == '>' || c == ',' || c == '(' || c == ')')
            .filter(|s| !s.is_empty())
            .map(|s| match s.strip_prefix('!') {
                Some(v) if !v.is_empty() => Ok((v.to_string(), false)),
                Some(_) => Err(Error::format("output order", "dangling `!`")),
                None => Ok((s.to_string(), true)),
            })
            .collect::<Result<Vec<_>>>()?;
        OutputOrder::new(lits)
    }

    /// Output letters of `io`, best first.
    pub fn preference(&self, io: &IoPartition) -> Result<Vec<usize>> {
        let names = io.output_names();
        for (v, _) in &self.literals {
            if !names.contains(&v.as_str()) {
                return Err(Error::UndeclaredVariable(v.clone()));
            }
        }
        let mut order: Vec<(usize, bool)> = self
            .literals
            .iter()
            .map(|(v, pos)| (names.iter().position(|n| n == v).expect("checked"), *pos))
            .collect();
        for k in 0..names.len() {
            if !order.iter().any(|&(j, _)| j == k) {
                order.push((k, false));
            }
        }
        let mut outs: Vec<usize> = (0..io.num_outputs()).collect();
        // Rank: bit string of satisfied literals, most important first.
        let rank = |o: usize| {
            order
                .iter()
                .fold(0usize, |acc, &(k, pos)| (acc << 1) | (io.output_bit(o, k) == pos) as usize)
        };
        outs.sort_by_key(|&o| std::cmp::Reverse(rank(o)));
        Ok(outs)
    }
}

impl fmt::Display for OutputOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .literals
            .iter()
            .map(|(v, pos)| if *pos { v.clone() } else { format!("!{v}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Keeps only the best allowed output under `ord` at every state and input.
pub fn determinize(sup: &Supervisor, ord: &OutputOrder) -> Result<Controller> {
    let pref = ord.preference(&sup.io)?;
    let mut rank = vec![0usize; pref.len()];
    for (r, &o) in pref.iter().enumerate() {
        rank[o] = r;
    }
    let ni = sup.io.num_inputs();
    let mut best = vec![usize::MAX; sup.dfa.num_states() * ni];
    for q in sup.live_states() {
        for i in 0..ni {
            best[q * ni + i] = sup
                .allowed(q, i)
                .map(|(o, _)| o)
                .min_by_key(|&o| rank[o])
                .unwrap_or(usize::MAX);
        }
    }
    let det = sup.restrict(|q, i, o| best[q * ni + i] == o)?;
    Controller::from_supervisor(det)
}

/// `s2` is at least as deterministic as `s1`: `L(s2) ⊆ L(s1)`.
pub fn leq_det(s1: &Supervisor, s2: &Supervisor) -> Result<bool> {
    if s1.io != s2.io {
        return Err(Error::AlphabetMismatch("supervisors over different interfaces".into()));
    }
    s2.dfa.included_in(&s1.dfa)
}

/// Convenience for tests and tools: the letter-level soft formula
/// `true^<phi>`.
pub fn letter_soft(phi: PropFormula, weight: u64) -> SoftReq {
    SoftReq {
        formula: Qddc::at_end(phi),
        weight,
    }
}
