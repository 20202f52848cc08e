//! Propositional formulas over a declared variable set, and the powerset
//! alphabet those variables induce.
//!
//! A letter of the alphabet `2^V` is stored as its canonical index: the
//! binary number whose bits are the variable values in declaration order,
//! first variable most significant.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Largest variable set whose alphabet we are willing to enumerate.
pub const MAX_VARS: usize = 20;

/// Ordered set of distinct propositional variable names.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.names).finish()
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.names.join(" "))
    }
}

impl VarSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vs = VarSet::default();
        for n in names {
            vs.push(n)?;
        }
        Ok(vs)
    }

    pub fn empty() -> Self {
        VarSet::default()
    }

    pub fn push(&mut self, name: impl Into<String>) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::DuplicateVariable(name));
        }
        let i = self.names.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        Ok(i)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Number of letters, `2^|V|`.
    pub fn alphabet_size(&self) -> usize {
        1usize << self.names.len()
    }

    pub fn check_capacity(&self) -> Result<()> {
        if self.names.len() > MAX_VARS {
            Err(Error::Capacity(format!(
                "{} variables exceed the alphabet cap of {MAX_VARS}",
                self.names.len()
            )))
        } else {
            Ok(())
        }
    }

    /// Value of variable `var` in the letter with index `letter`.
    #[inline]
    pub fn bit(&self, letter: usize, var: usize) -> bool {
        (letter >> (self.names.len() - 1 - var)) & 1 == 1
    }

    #[inline]
    pub fn with_bit(&self, letter: usize, var: usize, value: bool) -> usize {
        let mask = 1usize << (self.names.len() - 1 - var);
        if value {
            letter | mask
        } else {
            letter & !mask
        }
    }

    pub fn letter(&self, index: usize) -> Letter {
        debug_assert!(index < self.alphabet_size());
        Letter {
            index: index as u32,
            width: self.names.len() as u8,
        }
    }

    /// Builds a letter from the names of the variables that are true.
    pub fn letter_of(&self, true_vars: &[&str]) -> Result<Letter> {
        let mut idx = 0;
        for v in true_vars {
            let i = self
                .position(v)
                .ok_or_else(|| Error::UndeclaredVariable(v.to_string()))?;
            idx = self.with_bit(idx, i, true);
        }
        Ok(self.letter(idx))
    }

    /// Builds a letter from a bit vector in declaration order.
    pub fn letter_from_bits(&self, bits: &[bool]) -> Result<Letter> {
        if bits.len() != self.len() {
            return Err(Error::AlphabetMismatch(format!(
                "expected {} bits, got {}",
                self.len(),
                bits.len()
            )));
        }
        let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Ok(self.letter(idx))
    }

    /// Union keeping `self`'s order, then the new names of `other`.
    pub fn union(&self, other: &VarSet) -> VarSet {
        let mut out = self.clone();
        for n in other.names() {
            if !out.contains(n) {
                out.names.push(n.clone());
                out.index.insert(n.clone(), out.names.len() - 1);
            }
        }
        out
    }
}

/// One position of a word: a total valuation of a [`VarSet`], identified by
/// its canonical index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    index: u32,
    width: u8,
}

impl Letter {
    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn width(self) -> usize {
        self.width as usize
    }

    pub fn get(self, var: usize) -> bool {
        (self.index >> (self.width as usize - 1 - var)) & 1 == 1
    }

    pub fn bits(self) -> Vec<bool> {
        (0..self.width()).map(|v| self.get(v)).collect()
    }
}

/// All `2^|vars|` letters in canonical binary order.
pub fn enumerate_letters(vars: &VarSet) -> Result<Vec<Letter>> {
    vars.check_capacity()?;
    Ok((0..vars.alphabet_size()).map(|i| vars.letter(i)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PropFormula {
    False,
    True,
    Var(String),
    Not(Box<PropFormula>),
    And(Box<PropFormula>, Box<PropFormula>),
    Or(Box<PropFormula>, Box<PropFormula>),
    Implies(Box<PropFormula>, Box<PropFormula>),
    Iff(Box<PropFormula>, Box<PropFormula>),
}

impl PropFormula {
    pub fn var(name: impl Into<String>) -> Self {
        PropFormula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        PropFormula::Not(Box::new(self))
    }

    pub fn and(self, rhs: PropFormula) -> Self {
        PropFormula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: PropFormula) -> Self {
        PropFormula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: PropFormula) -> Self {
        PropFormula::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn iff(self, rhs: PropFormula) -> Self {
        PropFormula::Iff(Box::new(self), Box::new(rhs))
    }

    /// Disjunction of a list; `false` when empty.
    pub fn any(items: impl IntoIterator<Item = PropFormula>) -> Self {
        items
            .into_iter()
            .reduce(PropFormula::or)
            .unwrap_or(PropFormula::False)
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            PropFormula::False | PropFormula::True => {}
            PropFormula::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            PropFormula::Not(a) => a.vars(out),
            PropFormula::And(a, b)
            | PropFormula::Or(a, b)
            | PropFormula::Implies(a, b)
            | PropFormula::Iff(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// Renames variables through `f`; used for capture-free substitution.
    pub fn rename(&self, f: &dyn Fn(&str) -> Option<String>) -> PropFormula {
        match self {
            PropFormula::False => PropFormula::False,
            PropFormula::True => PropFormula::True,
            PropFormula::Var(v) => PropFormula::Var(f(v).unwrap_or_else(|| v.clone())),
            PropFormula::Not(a) => a.rename(f).not(),
            PropFormula::And(a, b) => a.rename(f).and(b.rename(f)),
            PropFormula::Or(a, b) => a.rename(f).or(b.rename(f)),
            PropFormula::Implies(a, b) => a.rename(f).implies(b.rename(f)),
            PropFormula::Iff(a, b) => a.rename(f).iff(b.rename(f)),
        }
    }

    /// Resolves variable names against `vars` for repeated evaluation.
    pub fn bind(&self, vars: &VarSet) -> Result<BoundProp> {
        Ok(match self {
            PropFormula::False => BoundProp::Const(false),
            PropFormula::True => BoundProp::Const(true),
            PropFormula::Var(v) => {
                let i = vars
                    .position(v)
                    .ok_or_else(|| Error::UndeclaredVariable(v.clone()))?;
                BoundProp::Var(vars.len() - 1 - i)
            }
            PropFormula::Not(a) => BoundProp::Not(Box::new(a.bind(vars)?)),
            PropFormula::And(a, b) => {
                BoundProp::And(Box::new(a.bind(vars)?), Box::new(b.bind(vars)?))
            }
            PropFormula::Or(a, b) => BoundProp::Or(Box::new(a.bind(vars)?), Box::new(b.bind(vars)?)),
            PropFormula::Implies(a, b) => BoundProp::Or(
                Box::new(BoundProp::Not(Box::new(a.bind(vars)?))),
                Box::new(b.bind(vars)?),
            ),
            PropFormula::Iff(a, b) => {
                BoundProp::Iff(Box::new(a.bind(vars)?), Box::new(b.bind(vars)?))
            }
        })
    }

    /// Truth value of the formula for every letter of `vars`, by letter index.
    pub fn truth_table(&self, vars: &VarSet) -> Result<Vec<bool>> {
        vars.check_capacity()?;
        let b = self.bind(vars)?;
        Ok((0..vars.alphabet_size()).map(|l| b.eval(l)).collect())
    }
}

/// Prop formula with variables resolved to bit shifts of a letter index.
#[derive(Clone, Debug)]
pub enum BoundProp {
    Const(bool),
    Var(usize),
    Not(Box<BoundProp>),
    And(Box<BoundProp>, Box<BoundProp>),
    Or(Box<BoundProp>, Box<BoundProp>),
    Iff(Box<BoundProp>, Box<BoundProp>),
}

impl BoundProp {
    pub fn eval(&self, letter: usize) -> bool {
        match self {
            BoundProp::Const(c) => *c,
            BoundProp::Var(shift) => (letter >> shift) & 1 == 1,
            BoundProp::Not(a) => !a.eval(letter),
            BoundProp::And(a, b) => a.eval(letter) && b.eval(letter),
            BoundProp::Or(a, b) => a.eval(letter) || b.eval(letter),
            BoundProp::Iff(a, b) => a.eval(letter) == b.eval(letter),
        }
    }
}

/// Evaluates `phi` at a letter of `vars`.
pub fn eval_prop(phi: &PropFormula, vars: &VarSet, letter: Letter) -> Result<bool> {
    if letter.width() != vars.len() {
        return Err(Error::AlphabetMismatch(format!(
            "letter has {} bits, variable set has {}",
            letter.width(),
            vars.len()
        )));
    }
    Ok(phi.bind(vars)?.eval(letter.index()))
}

fn prec(p: &PropFormula) -> u8 {
    match p {
        PropFormula::Iff(..) => 1,
        PropFormula::Implies(..) => 2,
        PropFormula::Or(..) => 3,
        PropFormula::And(..) => 4,
        PropFormula::Not(..) => 5,
        _ => 6,
    }
}

impl fmt::Display for PropFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, c: &PropFormula, min: u8| -> fmt::Result {
            if prec(c) < min {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        };
        match self {
            PropFormula::False => write!(f, "false"),
            PropFormula::True => write!(f, "true"),
            PropFormula::Var(v) => write!(f, "{v}"),
            PropFormula::Not(a) => {
                write!(f, "!")?;
                child(f, a, 5)
            }
            PropFormula::And(a, b) => {
                child(f, a, 4)?;
                write!(f, " && ")?;
                child(f, b, 5)
            }
            PropFormula::Or(a, b) => {
                child(f, a, 3)?;
                write!(f, " || ")?;
                child(f, b, 4)
            }
            PropFormula::Implies(a, b) => {
                child(f, a, 3)?;
                write!(f, " => ")?;
                child(f, b, 2)
            }
            PropFormula::Iff(a, b) => {
                child(f, a, 2)?;
                write!(f, " <=> ")?;
                child(f, b, 2)
            }
        }
    }
}
