//! Quantified Discrete Duration Calculus: formulas over finite non-empty
//! words, interpreted on intervals `[b, e]` of positions.
//!
//! The module keeps two layers. [`Qddc`] contains the core connectives plus a
//! handful of derived forms (`pt`, `[]D`, `pref(D)`, ...) that the parser
//! produces; [`desugar`] rewrites the derived forms away, leaving
//! the core that the automaton compiler understands. [`evaluate`] interprets
//! both layers directly on a trace and serves as the reference semantics.

mod eval;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::{evaluate, evaluate_prefixes, Interval, Trace};
pub use parse::{builtin_macros, parse, parse_prop, parse_with, Macro, MacroTable};
pub(crate) use parse::parse_at;

use crate::error::{Error, Result};
use crate::prop::{PropFormula, VarSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Cmp {
    pub fn holds(self, lhs: u64, rhs: u64) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Gt => lhs > rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Qddc {
    /// `<phi>`: point interval where `phi` holds.
    Point(PropFormula),
    /// `[phi]`: extended interval, `phi` at every position but the last.
    AllButLast(PropFormula),
    /// `[[phi]]`: `phi` at every position.
    All(PropFormula),
    Chop(Box<Qddc>, Box<Qddc>),
    Not(Box<Qddc>),
    And(Box<Qddc>, Box<Qddc>),
    Or(Box<Qddc>, Box<Qddc>),
    Exists(String, Box<Qddc>),
    Forall(String, Box<Qddc>),
    Slen(Cmp, u64),
    Scount(PropFormula, Cmp, u64),
    Sdur(PropFormula, Cmp, u64),
    // Derived forms.
    Pt,
    Ext,
    Diamond(Box<Qddc>),
    Square(Box<Qddc>),
    Pref(Box<Qddc>),
    Ep(String),
    Implies(Box<Qddc>, Box<Qddc>),
    Iff(Box<Qddc>, Box<Qddc>),
}

impl Qddc {
    /// The formula that holds on every interval, `[[true]]`.
    pub fn truth() -> Qddc {
        Qddc::All(PropFormula::True)
    }

    pub fn falsity() -> Qddc {
        Qddc::Point(PropFormula::False)
    }

    pub fn chop(self, rhs: Qddc) -> Qddc {
        Qddc::Chop(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Qddc {
        Qddc::Not(Box::new(self))
    }

    pub fn and(self, rhs: Qddc) -> Qddc {
        Qddc::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Qddc) -> Qddc {
        Qddc::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Qddc) -> Qddc {
        Qddc::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn iff(self, rhs: Qddc) -> Qddc {
        Qddc::Iff(Box::new(self), Box::new(rhs))
    }

    pub fn pref(self) -> Qddc {
        Qddc::Pref(Box::new(self))
    }

    pub fn square(self) -> Qddc {
        Qddc::Square(Box::new(self))
    }

    pub fn diamond(self) -> Qddc {
        Qddc::Diamond(Box::new(self))
    }

    pub fn exists(var: impl Into<String>, body: Qddc) -> Qddc {
        Qddc::Exists(var.into(), Box::new(body))
    }

    pub fn forall(var: impl Into<String>, body: Qddc) -> Qddc {
        Qddc::Forall(var.into(), Box::new(body))
    }

    /// `true^<phi>`: `phi` holds at the last position of the interval.
    pub fn at_end(phi: PropFormula) -> Qddc {
        Qddc::truth().chop(Qddc::Point(phi))
    }

    /// Conjunction of a list; `true` when empty.
    pub fn all_of(items: impl IntoIterator<Item = Qddc>) -> Qddc {
        items.into_iter().reduce(Qddc::and).unwrap_or_else(Qddc::truth)
    }

    pub fn is_core(&self) -> bool {
        match self {
            Qddc::Point(_)
            | Qddc::AllButLast(_)
            | Qddc::All(_)
            | Qddc::Slen(..)
            | Qddc::Scount(..)
            | Qddc::Sdur(..) => true,
            Qddc::Not(a) | Qddc::Exists(_, a) => a.is_core(),
            Qddc::Chop(a, b) | Qddc::And(a, b) | Qddc::Or(a, b) => a.is_core() && b.is_core(),
            _ => false,
        }
    }

    /// Free propositional variables, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let prop = |p: &PropFormula, bound: &Vec<String>, out: &mut Vec<String>| {
            let mut vs = Vec::new();
            p.vars(&mut vs);
            for v in vs {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            Qddc::Point(p) | Qddc::AllButLast(p) | Qddc::All(p) => prop(p, bound, out),
            Qddc::Scount(p, ..) | Qddc::Sdur(p, ..) => prop(p, bound, out),
            Qddc::Ep(w) => prop(&PropFormula::var(w.clone()), bound, out),
            Qddc::Slen(..) | Qddc::Pt | Qddc::Ext => {}
            Qddc::Not(a) | Qddc::Diamond(a) | Qddc::Square(a) | Qddc::Pref(a) => {
                a.collect_free(bound, out)
            }
            Qddc::Chop(a, b)
            | Qddc::And(a, b)
            | Qddc::Or(a, b)
            | Qddc::Implies(a, b)
            | Qddc::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Qddc::Exists(v, a) | Qddc::Forall(v, a) => {
                bound.push(v.clone());
                a.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Renames free variables; bound occurrences are left alone.
    pub fn rename_free(&self, f: &dyn Fn(&str) -> Option<String>) -> Qddc {
        self.rename_inner(f, &mut Vec::new())
    }

    fn rename_inner(&self, f: &dyn Fn(&str) -> Option<String>, bound: &mut Vec<String>) -> Qddc {
        let g = |v: &str| -> Option<String> {
            if bound.iter().any(|b| b == v) {
                None
            } else {
                f(v)
            }
        };
        let bx = |q: &Qddc, bound: &mut Vec<String>| Box::new(q.rename_inner(f, bound));
        match self {
            Qddc::Point(p) => Qddc::Point(p.rename(&g)),
            Qddc::AllButLast(p) => Qddc::AllButLast(p.rename(&g)),
            Qddc::All(p) => Qddc::All(p.rename(&g)),
            Qddc::Scount(p, c, n) => Qddc::Scount(p.rename(&g), *c, *n),
            Qddc::Sdur(p, c, n) => Qddc::Sdur(p.rename(&g), *c, *n),
            Qddc::Ep(w) => Qddc::Ep(g(w).unwrap_or_else(|| w.clone())),
            Qddc::Slen(c, n) => Qddc::Slen(*c, *n),
            Qddc::Pt => Qddc::Pt,
            Qddc::Ext => Qddc::Ext,
            Qddc::Not(a) => Qddc::Not(bx(a, bound)),
            Qddc::Diamond(a) => Qddc::Diamond(bx(a, bound)),
            Qddc::Square(a) => Qddc::Square(bx(a, bound)),
            Qddc::Pref(a) => Qddc::Pref(bx(a, bound)),
            Qddc::Chop(a, b) => Qddc::Chop(bx(a, bound), bx(b, bound)),
            Qddc::And(a, b) => Qddc::And(bx(a, bound), bx(b, bound)),
            Qddc::Or(a, b) => Qddc::Or(bx(a, bound), bx(b, bound)),
            Qddc::Implies(a, b) => Qddc::Implies(bx(a, bound), bx(b, bound)),
            Qddc::Iff(a, b) => Qddc::Iff(bx(a, bound), bx(b, bound)),
            Qddc::Exists(v, a) | Qddc::Forall(v, a) => {
                bound.push(v.clone());
                let body = bx(a, bound);
                bound.pop();
                if matches!(self, Qddc::Exists(..)) {
                    Qddc::Exists(v.clone(), body)
                } else {
                    Qddc::Forall(v.clone(), body)
                }
            }
        }
    }

    /// Fails with [`Error::UndeclaredVariable`] if a free variable is not in `vars`.
    pub fn check_vars(&self, vars: &VarSet) -> Result<()> {
        match self.free_vars().into_iter().find(|v| !vars.contains(v)) {
            Some(v) => Err(Error::UndeclaredVariable(v)),
            None => Ok(()),
        }
    }

    /// Recognizes `true^<phi>`, whose truth depends on the last letter only.
    pub fn as_last_letter(&self) -> Option<&PropFormula> {
        match self {
            Qddc::Chop(a, b) => match (a.as_ref(), b.as_ref()) {
                (Qddc::All(PropFormula::True), Qddc::Point(phi)) => Some(phi),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Rewrites every derived form into core connectives.
pub fn desugar(d: &Qddc) -> Qddc {
    let ds = |q: &Qddc| Box::new(desugar(q));
    match d {
        Qddc::Point(_)
        | Qddc::AllButLast(_)
        | Qddc::All(_)
        | Qddc::Slen(..)
        | Qddc::Scount(..)
        | Qddc::Sdur(..) => d.clone(),
        Qddc::Chop(a, b) => Qddc::Chop(ds(a), ds(b)),
        Qddc::Not(a) => Qddc::Not(ds(a)),
        Qddc::And(a, b) => Qddc::And(ds(a), ds(b)),
        Qddc::Or(a, b) => Qddc::Or(ds(a), ds(b)),
        Qddc::Exists(v, a) => Qddc::Exists(v.clone(), ds(a)),
        Qddc::Forall(v, a) => Qddc::exists(v.clone(), desugar(a).not()).not(),
        Qddc::Pt => Qddc::Point(PropFormula::True),
        Qddc::Ext => Qddc::Point(PropFormula::True).not(),
        Qddc::Diamond(a) => diamond_core(desugar(a)),
        Qddc::Square(a) => diamond_core(desugar(a).not()).not(),
        Qddc::Pref(a) => desugar(a).not().chop(Qddc::truth()).not(),
        Qddc::Ep(w) => Qddc::at_end(PropFormula::var(w.clone())),
        Qddc::Implies(a, b) => desugar(a).not().or(desugar(b)),
        Qddc::Iff(a, b) => {
            let (a, b) = (desugar(a), desugar(b));
            a.clone()
                .and(b.clone())
                .or(a.not().and(b.not()))
        }
    }
}

fn diamond_core(d: Qddc) -> Qddc {
    Qddc::truth().chop(d).chop(Qddc::truth())
}

/// Indicator definition `Ind(formula, witness)`: the witness variable is true
/// exactly at positions whose past satisfies the formula.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorDef {
    pub formula: Qddc,
    pub witness: String,
}

impl IndicatorDef {
    pub fn new(formula: Qddc, witness: impl Into<String>) -> Self {
        IndicatorDef {
            formula,
            witness: witness.into(),
        }
    }
}

/// Cascade composition `d << inds`: `d && pref(EP(w_i) <=> D_i)` for each
/// indicator. `base` is the variable set the witnesses must be fresh against.
pub fn cascade(d: Qddc, inds: &[IndicatorDef], base: &VarSet) -> Result<Qddc> {
    let mut seen = BTreeSet::new();
    for ind in inds {
        if base.contains(&ind.witness) || !seen.insert(ind.witness.clone()) {
            return Err(Error::WitnessCollision(ind.witness.clone()));
        }
    }
    for ind in inds {
        if ind
            .formula
            .free_vars()
            .iter()
            .any(|v| seen.contains(v))
        {
            return Err(Error::WitnessCollision(ind.witness.clone()));
        }
    }
    Ok(inds.iter().fold(d, |acc, ind| {
        acc.and(Qddc::Ep(ind.witness.clone()).iff(ind.formula.clone()).pref())
    }))
}

fn level(d: &Qddc) -> u8 {
    match d {
        Qddc::Exists(..) | Qddc::Forall(..) => 0,
        Qddc::Iff(..) => 1,
        Qddc::Implies(..) => 2,
        Qddc::Or(..) => 3,
        Qddc::And(..) => 4,
        Qddc::Chop(..) => 5,
        Qddc::Not(_) | Qddc::Diamond(_) | Qddc::Square(_) | Qddc::Pref(_) => 6,
        // Terms print with a trailing comparison, so keep them wrapped when
        // they sit inside a comparison-sensitive position.
        Qddc::Slen(..) | Qddc::Scount(..) | Qddc::Sdur(..) => 6,
        _ => 7,
    }
}

impl fmt::Display for Qddc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, c: &Qddc, min: u8| -> fmt::Result {
            if level(c) < min {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        };
        match self {
            Qddc::Point(p) => write!(f, "<{p}>"),
            Qddc::AllButLast(p) => write!(f, "[{p}]"),
            Qddc::All(PropFormula::True) => write!(f, "true"),
            Qddc::All(p) => write!(f, "[[{p}]]"),
            Qddc::Slen(c, n) => write!(f, "slen {} {n}", c.symbol()),
            Qddc::Scount(p, c, n) => write!(f, "scount ({p}) {} {n}", c.symbol()),
            Qddc::Sdur(p, c, n) => write!(f, "sdur ({p}) {} {n}", c.symbol()),
            Qddc::Pt => write!(f, "pt"),
            Qddc::Ext => write!(f, "ext"),
            Qddc::Ep(w) => write!(f, "EP({w})"),
            Qddc::Not(a) => {
                write!(f, "!")?;
                child(f, a, 7)
            }
            Qddc::Diamond(a) => {
                write!(f, "<>")?;
                child(f, a, 7)
            }
            Qddc::Square(a) => {
                write!(f, "[]")?;
                child(f, a, 7)
            }
            Qddc::Pref(a) => write!(f, "pref({a})"),
            Qddc::Chop(a, b) => {
                child(f, a, 5)?;
                write!(f, "^")?;
                child(f, b, 6)
            }
            Qddc::And(a, b) => {
                child(f, a, 4)?;
                write!(f, " && ")?;
                child(f, b, 5)
            }
            Qddc::Or(a, b) => {
                child(f, a, 3)?;
                write!(f, " || ")?;
                child(f, b, 4)
            }
            Qddc::Implies(a, b) => {
                child(f, a, 3)?;
                write!(f, " => ")?;
                child(f, b, 2)
            }
            Qddc::Iff(a, b) => {
                child(f, a, 2)?;
                write!(f, " <=> ")?;
                child(f, b, 2)
            }
            Qddc::Exists(v, a) => write!(f, "ex {v}. {a}"),
            Qddc::Forall(v, a) => write!(f, "all {v}. {a}"),
        }
    }
}

#[cfg(test)]
mod tests;
