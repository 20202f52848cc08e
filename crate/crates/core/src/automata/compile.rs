//! Structural compilation of core QDDC formulas into minimal total DFAs.

use std::collections::HashMap;

use super::Dfa;
use crate::error::Result;
use crate::prop::{PropFormula, VarSet};
use crate::qddc::{desugar, Qddc};

pub const DEFAULT_MAX_STATES: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub struct CompileOptions {
    /// Upper bound on the states of any intermediate automaton.
    pub max_states: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

/// Minimal DFA accepting exactly the non-empty words satisfying `d`.
pub fn compile(d: &Qddc, vars: &VarSet) -> Result<Dfa> {
    compile_with(d, vars, &CompileOptions::default())
}

pub fn compile_with(d: &Qddc, vars: &VarSet, opts: &CompileOptions) -> Result<Dfa> {
    vars.check_capacity()?;
    let core = desugar(d);
    core.check_vars(vars)?;
    Compiler {
        vars: vars.clone(),
        opts: *opts,
        cache: HashMap::new(),
        depth: 0,
    }
    .compile(&core)
}

struct Compiler {
    vars: VarSet,
    opts: CompileOptions,
    cache: HashMap<Qddc, Dfa>,
    depth: usize,
}

/// Nondeterministic automaton used for fusion and projection before
/// determinization.
struct Nfa {
    vars: VarSet,
    init: Vec<u32>,
    accepting: Vec<bool>,
    /// `succ[q][a]`, possibly several targets.
    succ: Vec<Vec<Vec<u32>>>,
    /// States from which no accepting state is reachable.
    dead: Vec<bool>,
}

impl Nfa {
    fn compute_dead(&mut self) {
        let n = self.accepting.len();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (q, rows) in self.succ.iter().enumerate() {
            for ts in rows {
                for &t in ts {
                    rev[t as usize].push(q);
                }
            }
        }
        let mut live = self.accepting.clone();
        let mut stack: Vec<usize> = (0..n).filter(|&q| live[q]).collect();
        while let Some(q) = stack.pop() {
            for &p in &rev[q] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        self.dead = live.into_iter().map(|l| !l).collect();
    }

    fn determinize(&self, max_states: usize) -> Result<Dfa> {
        let mut init: Vec<u32> = self.init.iter().copied().filter(|&q| !self.dead[q as usize]).collect();
        init.sort_unstable();
        init.dedup();
        let d = Dfa::explore(
            &self.vars,
            init,
            |set: &Vec<u32>, a| {
                let mut out: Vec<u32> = Vec::new();
                for &q in set {
                    for &t in &self.succ[q as usize][a] {
                        if !self.dead[t as usize] {
                            out.push(t);
                        }
                    }
                }
                out.sort_unstable();
                out.dedup();
                out
            },
            |set: &Vec<u32>| set.iter().any(|&q| self.accepting[q as usize]),
            max_states,
        )?;
        Ok(d.normalize_init().minimize())
    }
}

impl Compiler {
    fn finish(&self, d: Dfa) -> Dfa {
        d.normalize_init().minimize()
    }

    fn table(&self, p: &PropFormula) -> Result<Vec<bool>> {
        p.truth_table(&self.vars)
    }

    fn compile(&mut self, d: &Qddc) -> Result<Dfa> {
        if let Some(hit) = self.cache.get(d) {
            return Ok(hit.clone());
        }
        let out = self.compile_node(d)?;
        self.cache.insert(d.clone(), out.clone());
        Ok(out)
    }

    fn compile_node(&mut self, d: &Qddc) -> Result<Dfa> {
        let max = self.opts.max_states;
        let vars = self.vars.clone();
        let dfa = match d {
            Qddc::Point(p) => {
                let t = self.table(p)?;
                // 0 = nothing read, 1 = one letter satisfying p, 2 = sink
                Dfa::explore(
                    &vars,
                    0u8,
                    |&s, a| if s == 0 && t[a] { 1 } else { 2 },
                    |&s| s == 1,
                    max,
                )?
            }
            Qddc::AllButLast(p) => {
                let t = self.table(p)?;
                // (letters read capped at 2, all but the last satisfy p, last satisfies p)
                Dfa::explore(
                    &vars,
                    (0u8, true, true),
                    |&(len, ok, last), a| {
                        let ok = if len == 0 { true } else { ok && last };
                        ((len + 1).min(2), ok, t[a])
                    },
                    |&(len, ok, _)| len >= 2 && ok,
                    max,
                )?
            }
            Qddc::All(p) => {
                let t = self.table(p)?;
                Dfa::explore(
                    &vars,
                    (false, true),
                    |&(_, ok), a| (true, ok && t[a]),
                    |&(started, ok)| started && ok,
                    max,
                )?
            }
            Qddc::Slen(c, n) => {
                let (c, n) = (*c, *n);
                let cap = n + 2;
                Dfa::explore(
                    &vars,
                    0u64,
                    |&len, _| (len + 1).min(cap),
                    |&len| len >= 1 && c.holds(len - 1, n),
                    max,
                )?
            }
            Qddc::Scount(p, c, n) => {
                let t = self.table(p)?;
                let (c, n) = (*c, *n);
                let cap = n + 1;
                Dfa::explore(
                    &vars,
                    (false, 0u64),
                    |&(_, k), a| (true, (k + t[a] as u64).min(cap)),
                    |&(started, k)| started && c.holds(k, n),
                    max,
                )?
            }
            Qddc::Sdur(p, c, n) => {
                let t = self.table(p)?;
                let (c, n) = (*c, *n);
                let cap = n + 1;
                // (started, count over all positions but the last, last satisfies p)
                Dfa::explore(
                    &vars,
                    (false, 0u64, false),
                    |&(started, k, last), a| {
                        let k = if started { (k + last as u64).min(cap) } else { 0 };
                        (true, k, t[a])
                    },
                    |&(started, k, _)| started && c.holds(k, n),
                    max,
                )?
            }
            Qddc::Not(a) => return Ok(self.compile(a)?.complement()),
            Qddc::And(a, b) => {
                let (a, b) = (self.compile(a)?, self.compile(b)?);
                return a.product_capped(&b, |x, y| x && y, max);
            }
            Qddc::Or(a, b) => {
                let (a, b) = (self.compile(a)?, self.compile(b)?);
                return a.product_capped(&b, |x, y| x || y, max);
            }
            Qddc::Chop(a, b) => {
                let (a, b) = (self.compile(a)?, self.compile(b)?);
                return fusion(&a, &b).determinize(max);
            }
            Qddc::Exists(v, body) => return self.exists(v, body),
            other => unreachable!("derived form `{other}` survived desugaring"),
        };
        Ok(self.finish(dfa))
    }

    /// Projection of a fresh copy of `v` out of the automaton for `body`.
    fn exists(&mut self, v: &str, body: &Qddc) -> Result<Dfa> {
        self.depth += 1;
        let fresh = format!("{v}#{}", self.depth);
        let renamed = body.rename_free(&|n| (n == v).then(|| fresh.clone()));
        let mut inner_vars = self.vars.clone();
        inner_vars.push(fresh)?;
        inner_vars.check_capacity()?;
        let mut inner = Compiler {
            vars: inner_vars,
            opts: self.opts,
            cache: HashMap::new(),
            depth: self.depth,
        };
        let a = inner.compile(&renamed);
        self.depth -= 1;
        let a = a?;
        let k = self.vars.alphabet_size();
        let n = a.num_states();
        let succ = (0..n)
            .map(|q| {
                (0..k)
                    .map(|l| {
                        let mut ts = vec![a.next(q, l << 1) as u32, a.next(q, (l << 1) | 1) as u32];
                        ts.dedup();
                        ts
                    })
                    .collect()
            })
            .collect();
        let mut nfa = Nfa {
            vars: self.vars.clone(),
            init: vec![a.init() as u32],
            accepting: (0..n).map(|q| a.is_accepting(q)).collect(),
            succ,
            dead: Vec::new(),
        };
        nfa.compute_dead();
        nfa.determinize(self.opts.max_states)
    }
}

/// Fusion NFA for `a ^ b`: the chop position is read by both sides. States
/// `0..|a|` are `a`'s, the rest are `b`'s shifted by `|a|`.
fn fusion(a: &Dfa, b: &Dfa) -> Nfa {
    let k = a.alphabet_size();
    let na = a.num_states();
    let nb = b.num_states();
    let off = na as u32;
    let mut succ = Vec::with_capacity(na + nb);
    for q in 0..na {
        succ.push(
            (0..k)
                .map(|l| {
                    let t = a.next(q, l);
                    let mut ts = vec![t as u32];
                    if a.is_accepting(t) {
                        ts.push(off + b.next(b.init(), l) as u32);
                    }
                    ts
                })
                .collect(),
        );
    }
    for q in 0..nb {
        succ.push((0..k).map(|l| vec![off + b.next(q, l) as u32]).collect());
    }
    let mut accepting = vec![false; na];
    accepting.extend((0..nb).map(|q| b.is_accepting(q)));
    let mut nfa = Nfa {
        vars: a.vars().clone(),
        init: vec![a.init() as u32],
        accepting,
        succ,
        dead: Vec::new(),
    };
    nfa.compute_dead();
    nfa
}
