//! Random formula and trace generators for property tests.

use rand::Rng;

use crate::prop::{PropFormula, VarSet};
use crate::qddc::{Cmp, Qddc};

pub fn random_prop<R: Rng>(rng: &mut R, vars: &VarSet, depth: usize) -> PropFormula {
    let leaf = |rng: &mut R| -> PropFormula {
        if vars.is_empty() || rng.random_ratio(1, 6) {
            if rng.random_bool(0.5) {
                PropFormula::True
            } else {
                PropFormula::False
            }
        } else {
            PropFormula::var(vars.name(rng.random_range(0..vars.len())))
        }
    };
    if depth == 0 || rng.random_ratio(1, 3) {
        return leaf(rng);
    }
    match rng.random_range(0..4) {
        0 => random_prop(rng, vars, depth - 1).not(),
        1 => random_prop(rng, vars, depth - 1).and(random_prop(rng, vars, depth - 1)),
        2 => random_prop(rng, vars, depth - 1).or(random_prop(rng, vars, depth - 1)),
        _ => random_prop(rng, vars, depth - 1).implies(random_prop(rng, vars, depth - 1)),
    }
}

fn random_cmp<R: Rng>(rng: &mut R) -> Cmp {
    [Cmp::Lt, Cmp::Le, Cmp::Eq, Cmp::Ge, Cmp::Gt][rng.random_range(0..5)]
}

/// A core-only formula of depth at most `depth`. Quantifiers bind a variable
/// of `vars` (shadowing it) so formulas stay over the same alphabet.
pub fn random_core<R: Rng>(rng: &mut R, vars: &VarSet, depth: usize) -> Qddc {
    if depth == 0 || rng.random_ratio(1, 4) {
        return match rng.random_range(0..6) {
            0 => Qddc::Point(random_prop(rng, vars, 1)),
            1 => Qddc::AllButLast(random_prop(rng, vars, 1)),
            2 => Qddc::All(random_prop(rng, vars, 1)),
            3 => Qddc::Slen(random_cmp(rng), rng.random_range(0..4)),
            4 => Qddc::Scount(random_prop(rng, vars, 1), random_cmp(rng), rng.random_range(0..4)),
            _ => Qddc::Sdur(random_prop(rng, vars, 1), random_cmp(rng), rng.random_range(0..4)),
        };
    }
    let sub = |rng: &mut R| random_core(rng, vars, depth - 1);
    match rng.random_range(0..6) {
        0 => sub(rng).not(),
        1 => sub(rng).and(sub(rng)),
        2 => sub(rng).or(sub(rng)),
        3 | 4 => sub(rng).chop(sub(rng)),
        _ => {
            if vars.is_empty() {
                sub(rng).not()
            } else {
                let v = vars.name(rng.random_range(0..vars.len())).to_string();
                Qddc::exists(v, sub(rng))
            }
        }
    }
}

/// Like [`random_core`] but also uses derived forms.
pub fn random_sugared<R: Rng>(rng: &mut R, vars: &VarSet, depth: usize) -> Qddc {
    if depth == 0 || rng.random_ratio(1, 4) {
        return match rng.random_range(0..5) {
            0 => Qddc::Pt,
            1 => Qddc::Ext,
            2 if !vars.is_empty() => Qddc::Ep(vars.name(rng.random_range(0..vars.len())).to_string()),
            _ => random_core(rng, vars, 0),
        };
    }
    let sub = |rng: &mut R| random_sugared(rng, vars, depth - 1);
    match rng.random_range(0..10) {
        0 => sub(rng).diamond(),
        1 => sub(rng).square(),
        2 => sub(rng).pref(),
        3 => sub(rng).implies(sub(rng)),
        4 => sub(rng).iff(sub(rng)),
        5 if !vars.is_empty() => {
            let v = vars.name(rng.random_range(0..vars.len())).to_string();
            Qddc::forall(v, sub(rng))
        }
        6 => sub(rng).chop(sub(rng)),
        7 => sub(rng).and(sub(rng)),
        8 => sub(rng).not(),
        _ => sub(rng).or(sub(rng)),
    }
}

/// Every word of length exactly `len` over `vars`, as letter-index vectors.
pub fn all_words(vars: &VarSet, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let k = vars.alphabet_size();
    let total = k.pow(len as u32);
    (0..total).map(move |mut n| {
        let mut w = vec![0; len];
        for slot in w.iter_mut().rev() {
            *slot = n % k;
            n /= k;
        }
        w
    })
}
