//! Direct interval semantics. Every connective, derived ones included, is
//! evaluated from its definition; quantifiers enumerate all variants of the
//! quantified variable over the interval. Exponential, meant as an oracle.

use std::collections::HashMap;

use super::Qddc;
use crate::error::{Error, Result};
use crate::prop::{BoundProp, PropFormula, VarSet};

/// Non-empty finite word over the alphabet of `vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub vars: VarSet,
    pub letters: Vec<usize>,
}

impl Trace {
    pub fn new(vars: VarSet, letters: Vec<usize>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::format("trace", "traces are non-empty"));
        }
        if let Some(&l) = letters.iter().find(|&&l| l >= vars.alphabet_size()) {
            return Err(Error::AlphabetMismatch(format!(
                "letter index {l} outside alphabet of {} variables",
                vars.len()
            )));
        }
        Ok(Trace { vars, letters })
    }

    /// One row of booleans per variable, columns are positions.
    pub fn from_rows(vars: VarSet, rows: &[&[u8]]) -> Result<Self> {
        if rows.len() != vars.len() {
            return Err(Error::AlphabetMismatch("one row per variable".into()));
        }
        let n = rows.first().map_or(0, |r| r.len());
        let letters = (0..n)
            .map(|i| {
                rows.iter()
                    .fold(0usize, |acc, row| (acc << 1) | (row[i] != 0) as usize)
            })
            .collect();
        Trace::new(vars, letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    pub b: usize,
    pub e: usize,
}

impl Interval {
    pub fn new(b: usize, e: usize) -> Self {
        Interval { b, e }
    }
}

/// Formula with variables resolved to bit positions of a 64-bit letter word.
enum Node {
    Point(BoundProp),
    AllButLast(BoundProp),
    All(BoundProp),
    Chop(Box<Node>, Box<Node>),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Implies(Box<Node>, Box<Node>),
    Iff(Box<Node>, Box<Node>),
    Exists(usize, Box<Node>),
    Forall(usize, Box<Node>),
    Slen(super::Cmp, u64),
    Scount(BoundProp, super::Cmp, u64),
    Sdur(BoundProp, super::Cmp, u64),
    Pt,
    Ext,
    Diamond(Box<Node>),
    Square(Box<Node>),
    Pref(Box<Node>),
    Ep(usize),
}

struct Resolver {
    scope: HashMap<String, Vec<usize>>,
    next: usize,
}

impl Resolver {
    fn lookup(&self, v: &str) -> Result<usize> {
        self.scope
            .get(v)
            .and_then(|s| s.last().copied())
            .ok_or_else(|| Error::UndeclaredVariable(v.to_string()))
    }

    fn prop(&self, p: &PropFormula) -> Result<BoundProp> {
        Ok(match p {
            PropFormula::False => BoundProp::Const(false),
            PropFormula::True => BoundProp::Const(true),
            PropFormula::Var(v) => BoundProp::Var(self.lookup(v)?),
            PropFormula::Not(a) => BoundProp::Not(Box::new(self.prop(a)?)),
            PropFormula::And(a, b) => BoundProp::And(Box::new(self.prop(a)?), Box::new(self.prop(b)?)),
            PropFormula::Or(a, b) => BoundProp::Or(Box::new(self.prop(a)?), Box::new(self.prop(b)?)),
            PropFormula::Implies(a, b) => BoundProp::Or(
                Box::new(BoundProp::Not(Box::new(self.prop(a)?))),
                Box::new(self.prop(b)?),
            ),
            PropFormula::Iff(a, b) => BoundProp::Iff(Box::new(self.prop(a)?), Box::new(self.prop(b)?)),
        })
    }

    fn resolve(&mut self, d: &Qddc) -> Result<Node> {
        let bx = |s: &mut Self, q: &Qddc| -> Result<Box<Node>> { Ok(Box::new(s.resolve(q)?)) };
        Ok(match d {
            Qddc::Point(p) => Node::Point(self.prop(p)?),
            Qddc::AllButLast(p) => Node::AllButLast(self.prop(p)?),
            Qddc::All(p) => Node::All(self.prop(p)?),
            Qddc::Chop(a, b) => Node::Chop(bx(self, a)?, bx(self, b)?),
            Qddc::Not(a) => Node::Not(bx(self, a)?),
            Qddc::And(a, b) => Node::And(bx(self, a)?, bx(self, b)?),
            Qddc::Or(a, b) => Node::Or(bx(self, a)?, bx(self, b)?),
            Qddc::Implies(a, b) => Node::Implies(bx(self, a)?, bx(self, b)?),
            Qddc::Iff(a, b) => Node::Iff(bx(self, a)?, bx(self, b)?),
            Qddc::Exists(v, a) | Qddc::Forall(v, a) => {
                let slot = self.next;
                if slot >= 64 {
                    return Err(Error::Capacity("too many variables for the evaluator".into()));
                }
                self.next += 1;
                self.scope.entry(v.clone()).or_default().push(slot);
                let body = self.resolve(a);
                self.scope.get_mut(v).map(|s| s.pop());
                self.next -= 1;
                if matches!(d, Qddc::Exists(..)) {
                    Node::Exists(slot, Box::new(body?))
                } else {
                    Node::Forall(slot, Box::new(body?))
                }
            }
            Qddc::Slen(c, n) => Node::Slen(*c, *n),
            Qddc::Scount(p, c, n) => Node::Scount(self.prop(p)?, *c, *n),
            Qddc::Sdur(p, c, n) => Node::Sdur(self.prop(p)?, *c, *n),
            Qddc::Pt => Node::Pt,
            Qddc::Ext => Node::Ext,
            Qddc::Diamond(a) => Node::Diamond(bx(self, a)?),
            Qddc::Square(a) => Node::Square(bx(self, a)?),
            Qddc::Pref(a) => Node::Pref(bx(self, a)?),
            Qddc::Ep(w) => Node::Ep(self.lookup(w)?),
        })
    }
}

fn resolve(d: &Qddc, vars: &VarSet) -> Result<Node> {
    let n = vars.len();
    let mut scope: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, name) in vars.names().iter().enumerate() {
        scope.insert(name.clone(), vec![n - 1 - i]);
    }
    Resolver { scope, next: n }.resolve(d)
}

fn sat(node: &Node, w: &mut [u64], b: usize, e: usize) -> bool {
    let at = |p: &BoundProp, w: &[u64], i: usize| p.eval(w[i] as usize);
    match node {
        Node::Point(p) => b == e && at(p, w, b),
        Node::AllButLast(p) => b < e && (b..e).all(|i| at(p, w, i)),
        Node::All(p) => (b..=e).all(|i| at(p, w, i)),
        Node::Chop(x, y) => (b..=e).any(|i| sat(x, w, b, i) && sat(y, w, i, e)),
        Node::Not(x) => !sat(x, w, b, e),
        Node::And(x, y) => sat(x, w, b, e) && sat(y, w, b, e),
        Node::Or(x, y) => sat(x, w, b, e) || sat(y, w, b, e),
        Node::Implies(x, y) => !sat(x, w, b, e) || sat(y, w, b, e),
        Node::Iff(x, y) => sat(x, w, b, e) == sat(y, w, b, e),
        Node::Exists(slot, x) => variants(*slot, w, b, e).any_of(|w| sat(x, w, b, e)),
        Node::Forall(slot, x) => !variants(*slot, w, b, e).any_of(|w| !sat(x, w, b, e)),
        Node::Slen(c, n) => c.holds((e - b) as u64, *n),
        Node::Scount(p, c, n) => c.holds((b..=e).filter(|&i| at(p, w, i)).count() as u64, *n),
        Node::Sdur(p, c, n) => c.holds((b..e).filter(|&i| at(p, w, i)).count() as u64, *n),
        Node::Pt => b == e,
        Node::Ext => b < e,
        Node::Diamond(x) => (b..=e).any(|i| (i..=e).any(|j| sat(x, w, i, j))),
        Node::Square(x) => (b..=e).all(|i| (i..=e).all(|j| sat(x, w, i, j))),
        Node::Pref(x) => (b..=e).all(|j| sat(x, w, b, j)),
        Node::Ep(slot) => (w[e] >> slot) & 1 == 1,
    }
}

/// Enumerates every assignment of one variable over positions `b..=e`,
/// restoring the word afterwards.
struct Variants<'a> {
    slot: usize,
    w: &'a mut [u64],
    b: usize,
    e: usize,
}

fn variants(slot: usize, w: &mut [u64], b: usize, e: usize) -> Variants<'_> {
    Variants { slot, w, b, e }
}

impl Variants<'_> {
    fn any_of(self, mut f: impl FnMut(&mut [u64]) -> bool) -> bool {
        let mask = 1u64 << self.slot;
        let saved: Vec<u64> = self.w[self.b..=self.e].to_vec();
        let len = self.e - self.b + 1;
        let mut found = false;
        for assignment in 0u64..(1u64 << len) {
            for k in 0..len {
                let bit = (assignment >> k) & 1 == 1;
                let cell = &mut self.w[self.b + k];
                *cell = if bit { *cell | mask } else { *cell & !mask };
            }
            if f(self.w) {
                found = true;
                break;
            }
        }
        self.w[self.b..=self.e].copy_from_slice(&saved);
        found
    }
}

/// `t, iv |= d` by the interval semantics.
pub fn evaluate(d: &Qddc, t: &Trace, iv: Interval) -> Result<bool> {
    if iv.b > iv.e || iv.e >= t.len() {
        return Err(Error::IntervalOutOfRange {
            b: iv.b,
            e: iv.e,
            len: t.len(),
        });
    }
    let node = resolve(d, &t.vars)?;
    let mut w: Vec<u64> = t.letters.iter().map(|&l| l as u64).collect();
    Ok(sat(&node, &mut w, iv.b, iv.e))
}

/// Truth of `d` on every prefix interval `[0, i]` of the trace.
pub fn evaluate_prefixes(d: &Qddc, t: &Trace) -> Result<Vec<bool>> {
    let node = resolve(d, &t.vars)?;
    let mut w: Vec<u64> = t.letters.iter().map(|&l| l as u64).collect();
    Ok((0..t.len()).map(|e| sat(&node, &mut w, 0, e)).collect())
}
