//! Total deterministic automata over powerset alphabets.
//!
//! Transition tables are dense: row `q` holds one successor per canonical
//! letter index. Languages are sets of non-empty words. The acceptance flag
//! of the initial state is only meaningful if the initial state is re-entered;
//! [`Dfa::normalize_init`] gives a language-preserving form whose initial
//! state is non-accepting, which is what the compiler hands out.

mod compile;
mod io;

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

pub use compile::{compile, compile_with, CompileOptions, DEFAULT_MAX_STATES};
pub use io::{cube_cover, read_dfa, Cube};

use crate::error::{Error, Result};
use crate::prop::VarSet;

pub type StateId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    vars: VarSet,
    init: StateId,
    accepting: Vec<bool>,
    delta: Vec<u32>,
}

impl Dfa {
    /// Builds a DFA from raw parts, checking totality and ranges.
    pub fn from_parts(vars: VarSet, init: StateId, accepting: Vec<bool>, delta: Vec<u32>) -> Result<Dfa> {
        vars.check_capacity()?;
        let n = accepting.len();
        let k = vars.alphabet_size();
        if n == 0 || init >= n {
            return Err(Error::format("automaton", "initial state out of range"));
        }
        if delta.len() != n * k {
            return Err(Error::format("automaton", "transition table is not total"));
        }
        if delta.iter().any(|&t| t as usize >= n) {
            return Err(Error::format("automaton", "transition target out of range"));
        }
        Ok(Dfa {
            vars,
            init,
            accepting,
            delta,
        })
    }

    /// Explores the reachable part of a deterministic transition system.
    pub fn explore<S, F, A>(vars: &VarSet, init: S, mut step: F, mut accept: A, max_states: usize) -> Result<Dfa>
    where
        S: Clone + Eq + Hash,
        F: FnMut(&S, usize) -> S,
        A: FnMut(&S) -> bool,
    {
        vars.check_capacity()?;
        let k = vars.alphabet_size();
        let mut ids: HashMap<S, u32> = HashMap::new();
        let mut keys: Vec<S> = Vec::new();
        let mut delta: Vec<u32> = Vec::new();
        ids.insert(init.clone(), 0);
        keys.push(init);
        let mut next = 0;
        while next < keys.len() {
            let cur = keys[next].clone();
            for a in 0..k {
                let s = step(&cur, a);
                let id = match ids.get(&s) {
                    Some(&id) => id,
                    None => {
                        if keys.len() >= max_states {
                            return Err(Error::Capacity(format!(
                                "automaton exceeds {max_states} states"
                            )));
                        }
                        let id = keys.len() as u32;
                        ids.insert(s.clone(), id);
                        keys.push(s);
                        id
                    }
                };
                delta.push(id);
            }
            next += 1;
        }
        let accepting = keys.iter().map(&mut accept).collect();
        Ok(Dfa {
            vars: vars.clone(),
            init: 0,
            accepting,
            delta,
        })
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn init(&self) -> StateId {
        self.init
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.vars.alphabet_size()
    }

    #[inline]
    pub fn next(&self, q: StateId, letter: usize) -> StateId {
        self.delta[q * self.alphabet_size() + letter] as usize
    }

    pub fn row(&self, q: StateId) -> &[u32] {
        let k = self.alphabet_size();
        &self.delta[q * k..(q + 1) * k]
    }

    #[inline]
    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states()).filter(|&q| self.accepting[q])
    }

    /// States reachable from the initial state, in BFS order.
    pub fn reachable(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.num_states()];
        let mut order = vec![self.init];
        seen[self.init] = true;
        let mut i = 0;
        while i < order.len() {
            let q = order[i];
            for &t in self.row(q) {
                let t = t as usize;
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
            i += 1;
        }
        order
    }

    /// State reached after reading `word` from the initial state.
    pub fn run(&self, word: &[usize]) -> StateId {
        word.iter().fold(self.init, |q, &a| self.next(q, a))
    }

    /// Acceptance of a non-empty word given as letter indices.
    pub fn accepts_word(&self, word: &[usize]) -> Result<bool> {
        if word.is_empty() {
            return Err(Error::format("trace", "traces are non-empty"));
        }
        if let Some(&a) = word.iter().find(|&&a| a >= self.alphabet_size()) {
            return Err(Error::AlphabetMismatch(format!("letter index {a} out of range")));
        }
        Ok(self.is_accepting(self.run(word)))
    }

    /// Acceptance of the trace; the trace must be over exactly `self.vars()`.
    pub fn accepts(&self, t: &crate::qddc::Trace) -> Result<bool> {
        self.same_alphabet_vars(&t.vars)?;
        self.accepts_word(&t.letters)
    }

    /// Acceptance after each prefix of `word`.
    pub fn prefix_acceptance(&self, word: &[usize]) -> Vec<bool> {
        let mut q = self.init;
        word.iter()
            .map(|&a| {
                q = self.next(q, a);
                self.accepting[q]
            })
            .collect()
    }

    fn same_alphabet_vars(&self, other: &VarSet) -> Result<()> {
        if &self.vars != other {
            return Err(Error::AlphabetMismatch(format!(
                "automaton over [{}], got [{}]",
                self.vars, other
            )));
        }
        Ok(())
    }

    fn same_alphabet(&self, other: &Dfa) -> Result<()> {
        self.same_alphabet_vars(&other.vars)
    }

    /// Equivalent automaton whose initial state is non-accepting and never
    /// re-entered when it would otherwise need to accept.
    pub fn normalize_init(mut self) -> Dfa {
        if self.accepting[self.init] {
            let k = self.alphabet_size();
            let row: Vec<u32> = self.row(self.init).to_vec();
            self.delta.extend(row);
            self.accepting.push(false);
            self.init = self.accepting.len() - 1;
            debug_assert_eq!(self.delta.len(), self.accepting.len() * k);
        }
        self
    }

    /// Moore partition refinement on the reachable part. The result has
    /// states numbered in BFS order from the initial state.
    pub fn minimize(&self) -> Dfa {
        let reach = self.reachable();
        let k = self.alphabet_size();
        let mut local = vec![usize::MAX; self.num_states()];
        for (i, &q) in reach.iter().enumerate() {
            local[q] = i;
        }
        let n = reach.len();
        let succ: Vec<usize> = reach
            .iter()
            .flat_map(|&q| self.row(q).iter().map(|&t| local[t as usize]))
            .collect();
        let mut class: Vec<usize> = reach.iter().map(|&q| self.accepting[q] as usize).collect();
        let mut count = if class.iter().all(|&c| c == class[0]) { 1 } else { 2 };
        if count == 1 {
            class.iter_mut().for_each(|c| *c = 0);
        }
        loop {
            let mut sigs: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut next = vec![0; n];
            for s in 0..n {
                let mut sig = Vec::with_capacity(k + 1);
                sig.push(class[s]);
                sig.extend(succ[s * k..(s + 1) * k].iter().map(|&t| class[t]));
                let id = sigs.len();
                next[s] = *sigs.entry(sig).or_insert(id);
            }
            let new_count = sigs.len();
            class = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        // Renumber classes in BFS order from the initial state.
        let mut order = vec![usize::MAX; count];
        let mut rep = Vec::with_capacity(count);
        let mut queue = VecDeque::from([0usize]);
        order[class[0]] = 0;
        rep.push(0);
        while let Some(s) = queue.pop_front() {
            for &t in &succ[s * k..(s + 1) * k] {
                if order[class[t]] == usize::MAX {
                    order[class[t]] = rep.len();
                    rep.push(t);
                    queue.push_back(t);
                }
            }
        }
        let delta = rep
            .iter()
            .flat_map(|&s| succ[s * k..(s + 1) * k].iter().map(|&t| order[class[t]] as u32))
            .collect::<Vec<_>>();
        let accepting = rep.iter().map(|&s| self.accepting[reach[s]]).collect();
        Dfa {
            vars: self.vars.clone(),
            init: 0,
            accepting,
            delta,
        }
    }

    /// Synchronous product; a pair state accepts iff `combine` of the
    /// components' acceptance holds.
    pub fn product(&self, other: &Dfa, combine: impl Fn(bool, bool) -> bool) -> Result<Dfa> {
        self.product_capped(other, combine, DEFAULT_MAX_STATES)
    }

    pub fn product_capped(&self, other: &Dfa, combine: impl Fn(bool, bool) -> bool, max_states: usize) -> Result<Dfa> {
        self.same_alphabet(other)?;
        let d = Dfa::explore(
            &self.vars,
            (self.init, other.init),
            |&(p, q), a| (self.next(p, a), other.next(q, a)),
            |&(p, q)| combine(self.accepting[p], other.accepting[q]),
            max_states,
        )?;
        Ok(d.normalize_init().minimize())
    }

    /// Complement with respect to non-empty words.
    pub fn complement(&self) -> Dfa {
        let mut d = self.clone();
        d.accepting.iter_mut().for_each(|a| *a = !*a);
        // The initial state may be re-entered, so it is flipped with the
        // rest; normalization splits off a non-accepting initial copy.
        d.normalize_init().minimize()
    }

    /// True iff no non-empty word is accepted.
    pub fn is_empty(&self) -> bool {
        // states reached after >= 1 letter
        let mut after_one = vec![false; self.num_states()];
        let mut stack = Vec::new();
        for &t in self.row(self.init) {
            if !after_one[t as usize] {
                after_one[t as usize] = true;
                stack.push(t as usize);
            }
        }
        while let Some(q) = stack.pop() {
            if self.accepting[q] {
                return false;
            }
            for &t in self.row(q) {
                if !after_one[t as usize] {
                    after_one[t as usize] = true;
                    stack.push(t as usize);
                }
            }
        }
        true
    }

    /// Searches the pair graph for a non-empty word on which `bad` holds for
    /// the acceptance flags. Returns the witness word.
    fn pair_witness(&self, other: &Dfa, bad: impl Fn(bool, bool) -> bool) -> Result<Option<Vec<usize>>> {
        self.same_alphabet(other)?;
        let k = self.alphabet_size();
        let mut parent: HashMap<(StateId, StateId), Option<((StateId, StateId), usize)>> = HashMap::new();
        let mut queue = VecDeque::new();
        let start = (self.init, other.init);
        for a in 0..k {
            let s = (self.next(start.0, a), other.next(start.1, a));
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(s) {
                e.insert(Some((start, a)));
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            if bad(self.accepting[s.0], other.accepting[s.1]) {
                let mut word = Vec::new();
                let mut cur = s;
                while let Some(Some((prev, a))) = parent.get(&cur) {
                    word.push(*a);
                    if *prev == start {
                        break;
                    }
                    cur = *prev;
                }
                word.reverse();
                return Ok(Some(word));
            }
            for a in 0..k {
                let t = (self.next(s.0, a), other.next(s.1, a));
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(t) {
                    e.insert(Some((s, a)));
                    queue.push_back(t);
                }
            }
        }
        Ok(None)
    }

    /// `L(self) == L(other)` over non-empty words.
    pub fn equivalent(&self, other: &Dfa) -> Result<bool> {
        Ok(self.pair_witness(other, |a, b| a != b)?.is_none())
    }

    /// A shortest non-empty word accepted by exactly one of the automata.
    pub fn distinguishing_word(&self, other: &Dfa) -> Result<Option<Vec<usize>>> {
        self.pair_witness(other, |a, b| a != b)
    }

    /// `L(self) ⊆ L(other)`.
    pub fn included_in(&self, other: &Dfa) -> Result<bool> {
        Ok(self.pair_witness(other, |a, b| a && !b)?.is_none())
    }

    /// Every non-empty prefix of an accepted word is accepted.
    pub fn is_prefix_closed(&self) -> bool {
        let m = self.minimize();
        let n = m.num_states();
        // co-reachability to acceptance in >= 1 step
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for q in 0..n {
            for &t in m.row(q) {
                rev[t as usize].push(q);
            }
        }
        let mut live = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        for q in m.accepting_states() {
            for &p in &rev[q] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        while let Some(q) = stack.pop() {
            for &p in &rev[q] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        // states reached after >= 1 letter
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = m.row(m.init).iter().map(|&t| t as usize).collect();
        for &q in &stack {
            seen[q] = true;
        }
        while let Some(q) = stack.pop() {
            if !m.accepting[q] && live[q] {
                return false;
            }
            for &t in m.row(q) {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    stack.push(t as usize);
                }
            }
        }
        true
    }

    /// Relabels the alphabet: `map(letter_of_new) = letter_of_self`. Used to
    /// lift an automaton to a larger variable set.
    pub fn lift(&self, vars: &VarSet) -> Result<Dfa> {
        let positions: Vec<usize> = self
            .vars
            .names()
            .iter()
            .map(|n| vars.position(n).ok_or_else(|| Error::UndeclaredVariable(n.clone())))
            .collect::<Result<_>>()?;
        vars.check_capacity()?;
        let k_new = vars.alphabet_size();
        let project: Vec<usize> = (0..k_new)
            .map(|a| {
                positions
                    .iter()
                    .fold(0usize, |acc, &p| (acc << 1) | vars.bit(a, p) as usize)
            })
            .collect();
        let n = self.num_states();
        let mut delta = Vec::with_capacity(n * k_new);
        for q in 0..n {
            let row = self.row(q);
            delta.extend(project.iter().map(|&a| row[a]));
        }
        Ok(Dfa {
            vars: vars.clone(),
            init: self.init,
            accepting: self.accepting.clone(),
            delta,
        })
    }
}
