//! Sparse Gauss–Jordan elimination over exact rationals or `f64`.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};

pub(crate) trait Scalar: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn from_int(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    /// Pivot preference; larger is better.
    fn magnitude(&self) -> f64;
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    // Any non-zero pivot is exact; prefer small ones to limit growth.
    fn magnitude(&self) -> f64 {
        let bits = self.numer().bits() + self.denom().bits();
        -(bits as f64)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

/// Square sparse system `A x = b`; `rows[r]` lists `(column, coefficient)`.
#[derive(Clone, Debug)]
pub(crate) struct System<F> {
    pub rows: Vec<BTreeMap<usize, F>>,
    pub rhs: Vec<F>,
}

impl<F: Scalar> System<F> {
    pub fn new(n: usize) -> Self {
        System {
            rows: vec![BTreeMap::new(); n],
            rhs: vec![F::zero(); n],
        }
    }

    pub fn add(&mut self, r: usize, c: usize, v: F) {
        let e = self.rows[r].entry(c).or_insert_with(F::zero);
        *e = e.add(&v);
        if e.is_zero() {
            self.rows[r].remove(&c);
        }
    }

    /// `None` when singular.
    pub fn solve(mut self) -> Option<Vec<F>> {
        let n = self.rows.len();
        let mut pivot_of = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for col in 0..n {
            let p = (0..n)
                .filter(|&r| !used[r])
                .filter_map(|r| self.rows[r].get(&col).map(|v| (r, v.magnitude())))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))?
                .0;
            used[p] = true;
            pivot_of[col] = p;
            let inv = self.rows[p][&col].clone();
            let prow: Vec<(usize, F)> = self.rows[p].iter().map(|(&c, v)| (c, v.div(&inv))).collect();
            let prhs = self.rhs[p].div(&inv);
            self.rows[p] = prow.iter().cloned().collect();
            self.rhs[p] = prhs.clone();
            for r in 0..n {
                if r == p {
                    continue;
                }
                let Some(f) = self.rows[r].get(&col).cloned() else {
                    continue;
                };
                for (c, v) in &prow {
                    let e = self.rows[r].entry(*c).or_insert_with(F::zero);
                    *e = e.sub(&f.mul(v));
                    if e.is_zero() {
                        self.rows[r].remove(c);
                    }
                }
                // Exact cancellation for f64 too.
                self.rows[r].remove(&col);
                self.rhs[r] = self.rhs[r].sub(&f.mul(&prhs));
            }
        }
        Some((0..n).map(|c| self.rhs[pivot_of[c]].clone()).collect())
    }
}

/// Max-norm residual of `A x − b`.
pub(crate) fn residual(sys: &System<f64>, x: &[f64]) -> f64 {
    sys.rows
        .iter()
        .zip(&sys.rhs)
        .map(|(row, b)| (row.iter().map(|(&c, v)| v * x[c]).sum::<f64>() - b).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(if r.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}
