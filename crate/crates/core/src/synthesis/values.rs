//! Finite-horizon value iteration for the H-optimal pruning step.
//!
//! Exact mode works on scaled integers: with `n` inputs, `U_m = n^m · V_m`
//! is integral because every step averages over `n` inputs, and the argmax
//! at a fixed horizon is invariant under the common scale.

use num::{BigInt, BigRational, One, Zero};

use super::Arena;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Arith {
    #[default]
    Exact,
    /// `f64` values; outputs within a relative `1e-9` of the best are tied.
    Float,
}

const FLOAT_TIE: f64 = 1e-9;

/// `V_H` per arena state. `states[s]` is the supervisor state underlying
/// arena state `s`.
#[derive(Clone, Debug)]
pub struct ValueTable {
    pub horizon: usize,
    pub values: Vec<BigRational>,
    pub states: Vec<usize>,
}

impl ValueTable {
    /// Value of the arena's initial state.
    pub fn initial(&self) -> &BigRational {
        &self.values[0]
    }
}

pub(crate) enum Values {
    /// Scaled values `U_H` and the scale `n^H`.
    Exact(Vec<BigInt>, BigInt),
    Float(Vec<f64>),
}

impl Values {
    pub fn to_rational(&self) -> Vec<BigRational> {
        match self {
            Values::Exact(u, scale) => u.iter().map(|x| BigRational::new(x.clone(), scale.clone())).collect(),
            Values::Float(v) => v
                .iter()
                .map(|&x| BigRational::from_float(x).unwrap_or_else(BigRational::zero))
                .collect(),
        }
    }
}

pub(crate) fn iterate(arena: &Arena, ni: usize, no: usize, horizon: usize, arith: Arith) -> Values {
    let n = arena.len();
    match arith {
        Arith::Exact => {
            let mut u = vec![BigInt::zero(); n];
            let mut scale = BigInt::one();
            for _ in 0..horizon {
                let mut next = vec![BigInt::zero(); n];
                for (s, slot) in next.iter_mut().enumerate() {
                    for i in 0..ni {
                        let best = (0..no)
                            .filter_map(|o| arena.mv(s, i, o))
                            .map(|(t, w)| BigInt::from(w) * &scale + &u[t])
                            .max();
                        if let Some(b) = best {
                            *slot += b;
                        }
                    }
                }
                u = next;
                scale *= ni;
            }
            Values::Exact(u, scale)
        }
        Arith::Float => {
            let mut v = vec![0.0f64; n];
            for _ in 0..horizon {
                let next: Vec<f64> = (0..n)
                    .map(|s| {
                        (0..ni)
                            .filter_map(|i| {
                                (0..no)
                                    .filter_map(|o| arena.mv(s, i, o))
                                    .map(|(t, w)| w as f64 + v[t])
                                    .reduce(f64::max)
                            })
                            .sum::<f64>()
                            / ni as f64
                    })
                    .collect();
                v = next;
            }
            Values::Float(v)
        }
    }
}

/// `keep[s * k + letter]`: whether the move attains the per-input maximum of
/// current weight plus successor value.
pub(crate) fn optimal_moves(arena: &Arena, values: &Values, ni: usize, no: usize) -> Vec<bool> {
    let k = arena.k;
    let mut keep = vec![false; arena.len() * k];
    for s in 0..arena.len() {
        for i in 0..ni {
            let moves: Vec<(usize, usize, u64)> = (0..no)
                .filter_map(|o| arena.mv(s, i, o).map(|(t, w)| (o, t, w)))
                .collect();
            if moves.is_empty() {
                continue;
            }
            let winners: Vec<usize> = match values {
                Values::Exact(u, scale) => {
                    let score: Vec<BigInt> = moves.iter().map(|&(_, t, w)| BigInt::from(w) * scale + &u[t]).collect();
                    let best = score.iter().max().expect("non-empty").clone();
                    moves.iter().zip(&score).filter(|(_, x)| **x == best).map(|(m, _)| m.0).collect()
                }
                Values::Float(v) => {
                    let score: Vec<f64> = moves.iter().map(|&(_, t, w)| w as f64 + v[t]).collect();
                    let best = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let tol = FLOAT_TIE * (1.0 + best.abs());
                    moves.iter().zip(&score).filter(|(_, x)| best - **x <= tol).map(|(m, _)| m.0).collect()
                }
            };
            for o in winners {
                keep[s * k + arena.letter(i, o)] = true;
            }
        }
    }
    keep
}
