//! Text and DOT renderings of automata.
//!
//! The text format is line oriented:
//!
//! ```text
//! vars: p q r
//! states: 3
//! init: 0
//! accepting: 1
//! 0 5 1
//! ...
//! ```
//!
//! followed by `from letter_index to` triples. Missing triples are completed
//! with a fresh rejecting sink, so partial monitor automata can be imported.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::Dfa;
use crate::error::{Error, Result};
use crate::prop::VarSet;

/// A conjunction of literals: bits in `care` are fixed to the matching bit of
/// `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cube {
    pub care: usize,
    pub value: usize,
}

impl Cube {
    pub fn contains(self, letter: usize) -> bool {
        letter & self.care == self.value
    }

    pub fn render(self, vars: &VarSet) -> String {
        let n = vars.len();
        let lits: Vec<String> = (0..n)
            .filter(|&i| (self.care >> (n - 1 - i)) & 1 == 1)
            .map(|i| {
                if (self.value >> (n - 1 - i)) & 1 == 1 {
                    vars.name(i).to_string()
                } else {
                    format!("!{}", vars.name(i))
                }
            })
            .collect();
        if lits.is_empty() {
            "true".into()
        } else {
            lits.join("&")
        }
    }
}

/// Prime-implicant cover of a set of letters over `nvars` bits.
pub fn cube_cover(letters: &[usize], nvars: usize) -> Vec<Cube> {
    let full = (1usize << nvars) - 1;
    let set: std::collections::HashSet<usize> = letters.iter().copied().collect();
    let mut level: Vec<Cube> = letters.iter().map(|&l| Cube { care: full, value: l }).collect();
    level.sort();
    level.dedup();
    let mut primes: Vec<Cube> = Vec::new();
    while !level.is_empty() {
        let mut merged = vec![false; level.len()];
        let mut next: Vec<Cube> = Vec::new();
        for i in 0..level.len() {
            for j in i + 1..level.len() {
                let (a, b) = (level[i], level[j]);
                if a.care != b.care {
                    continue;
                }
                let diff = a.value ^ b.value;
                if diff.count_ones() == 1 {
                    merged[i] = true;
                    merged[j] = true;
                    next.push(Cube {
                        care: a.care & !diff,
                        value: a.value & !diff,
                    });
                }
            }
        }
        for (i, c) in level.iter().enumerate() {
            if !merged[i] {
                primes.push(*c);
            }
        }
        next.sort();
        next.dedup();
        level = next;
    }
    // greedy cover
    let mut uncovered: Vec<usize> = {
        let mut v: Vec<usize> = set.into_iter().collect();
        v.sort();
        v
    };
    let mut cover = Vec::new();
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .max_by_key(|c| (uncovered.iter().filter(|&&l| c.contains(l)).count(), c.care.count_zeros()))
            .copied()
            .expect("primes cover every letter");
        uncovered.retain(|&l| !best.contains(l));
        cover.push(best);
    }
    cover.sort();
    cover
}

impl Dfa {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vars: {}", self.vars());
        let _ = writeln!(s, "states: {}", self.num_states());
        let _ = writeln!(s, "init: {}", self.init());
        let acc: Vec<String> = self.accepting_states().map(|q| q.to_string()).collect();
        let _ = writeln!(s, "accepting: {}", acc.join(" "));
        for q in 0..self.num_states() {
            for (a, &t) in self.row(q).iter().enumerate() {
                let _ = writeln!(s, "{q} {a} {t}");
            }
        }
        s
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{name}\" {{");
        let _ = writeln!(s, "  rankdir=LR;");
        let _ = writeln!(s, "  __start [shape=point];");
        for q in 0..self.num_states() {
            let shape = if self.is_accepting(q) { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  {q} [shape={shape}];");
        }
        let _ = writeln!(s, "  __start -> {};", self.init());
        for q in 0..self.num_states() {
            let mut by_target: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for (a, &t) in self.row(q).iter().enumerate() {
                by_target.entry(t).or_default().push(a);
            }
            for (t, letters) in by_target {
                let label: Vec<String> = cube_cover(&letters, self.vars().len())
                    .into_iter()
                    .map(|c| c.render(self.vars()))
                    .collect();
                let _ = writeln!(s, "  {q} -> {t} [label=\"{}\"];", label.join(" | "));
            }
        }
        s.push_str("}\n");
        s
    }
}

fn header<'a>(line: Option<(usize, &'a str)>, key: &str) -> Result<&'a str> {
    let (no, line) = line.ok_or_else(|| Error::format("automaton", format!("missing `{key}:` line")))?;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix(':'))
        .map(str::trim)
        .ok_or_else(|| Error::format("automaton", format!("line {}: expected `{key}:`", no + 1)))
}

fn num(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::format("automaton", format!("line {line}: `{s}` is not a number")))
}

/// Parses the text format produced by [`Dfa::to_text`].
pub fn read_dfa(text: &str) -> Result<Dfa> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let vars = VarSet::new(header(lines.next(), "vars")?.split_whitespace())?;
    vars.check_capacity()?;
    let n = num(header(lines.next(), "states")?, 2)?;
    let init = num(header(lines.next(), "init")?, 3)?;
    let acc_line = header(lines.next(), "accepting")?;
    if n == 0 {
        return Err(Error::format("automaton", "at least one state required"));
    }
    let k = vars.alphabet_size();
    let sink = n as u32;
    let mut delta = vec![sink; (n + 1) * k];
    let mut accepting = vec![false; n + 1];
    for tok in acc_line.split_whitespace() {
        let q = num(tok, 4)?;
        if q >= n {
            return Err(Error::format("automaton", format!("accepting state {q} out of range")));
        }
        accepting[q] = true;
    }
    for (no, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::format("automaton", format!("line {}: expected `from letter to`", no + 1)));
        }
        let (q, a, t) = (num(parts[0], no + 1)?, num(parts[1], no + 1)?, num(parts[2], no + 1)?);
        if q >= n || t >= n || a >= k {
            return Err(Error::format("automaton", format!("line {}: index out of range", no + 1)));
        }
        delta[q * k + a] = t as u32;
    }
    let needs_sink = delta[..n * k].contains(&sink);
    if !needs_sink {
        delta.truncate(n * k);
        accepting.truncate(n);
    }
    Dfa::from_parts(vars, init, accepting, delta)
}
