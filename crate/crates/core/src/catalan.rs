//! Catalan quadrilateral numbers.
//!
//! `C_m^{a,b}(l,d)` counts strings of `l` likes and `d` dislikes such that
//! every prefix with `l'` likes and `d'` dislikes keeps `a*l' - b*d' >= -m`.
//! The classic Catalan triangle is `a = b = 1, m = 0`; the trapezoid is
//! `a = b = 1` with integer `m`. Slopes and offset may be real.
//!
//! Convention: `C_m` here counts strings that never go more than `m` net
//! dislikes below zero, which is the trapezoid `C'_{m+1}` of the older
//! literature.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::model::ReviewCount;

/// Default cap on `t_max` for [`CatalanTable::build`].
pub const DEFAULT_MAX_T: usize = 10_000;

/// Slack granted to near-boundary cells in the barrier test `a*l - b*d >= -m`.
pub const DEFAULT_BARRIER_EPS: f64 = 1e-12;

/// Exact quadrilateral counts for every cell with `l + d <= t_max`.
///
/// Stored as a triangular array, one row per diagonal `t = l + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalanTable {
    a: f64,
    b: f64,
    m: f64,
    t_max: usize,
    // diagonals[t][l] = C(l, t - l)
    diagonals: Vec<Vec<BigUint>>,
}

impl CatalanTable {
    /// Builds the table with the default cap and barrier slack.
    pub fn build(a: f64, b: f64, m: f64, t_max: usize) -> Result<Self> {
        Self::build_with(a, b, m, t_max, DEFAULT_MAX_T, DEFAULT_BARRIER_EPS)
    }

    pub fn build_with(
        a: f64,
        b: f64,
        m: f64,
        t_max: usize,
        cap: usize,
        barrier_eps: f64,
    ) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("a", format!("need a > 0, got {a}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid("b", format!("need b > 0, got {b}")));
        }
        if !(m >= 0.0) {
            return Err(invalid("m", format!("need m >= 0, got {m}")));
        }
        if t_max > cap {
            return Err(Error::CapExceeded {
                what: "t_max",
                value: t_max,
                cap,
            });
        }
        let alive = |l: usize, d: usize| a * l as f64 - b * d as f64 >= -m - barrier_eps;

        let mut diagonals: Vec<Vec<BigUint>> = Vec::with_capacity(t_max + 1);
        diagonals.push(vec![BigUint::one()]);
        for t in 1..=t_max {
            let prev = &diagonals[t - 1];
            let row: Vec<BigUint> = (0..=t)
                .map(|l| {
                    let d = t - l;
                    if !alive(l, d) {
                        return BigUint::zero();
                    }
                    let mut count = BigUint::zero();
                    if l > 0 {
                        count += &prev[l - 1];
                    }
                    if d > 0 {
                        count += &prev[l];
                    }
                    count
                })
                .collect();
            diagonals.push(row);
        }
        Ok(Self {
            a,
            b,
            m,
            t_max,
            diagonals,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    /// Count at `(likes, dislikes)`, or `None` outside the table.
    pub fn get(&self, r: ReviewCount) -> Option<&BigUint> {
        let t = r.total() as usize;
        self.diagonals.get(t).map(|row| &row[r.likes as usize])
    }

    /// Count at `(l, d)`; panics outside the table.
    pub fn count(&self, likes: u32, dislikes: u32) -> &BigUint {
        self.get(ReviewCount::new(likes, dislikes))
            .expect("cell outside the Catalan table")
    }

    /// All cells as `(likes, dislikes, count)`, diagonal by diagonal.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32, &BigUint)> + '_ {
        self.diagonals.iter().enumerate().flat_map(|(t, row)| {
            row.iter()
                .enumerate()
                .map(move |(l, c)| (l as u32, (t - l) as u32, c))
        })
    }
}

/// Binomial coefficient with exact big-integer arithmetic.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Closed form of the Catalan trapezoid `C_m(l,d)`:
/// `binom(l+d, d)` when `d <= m`, `binom(l+d, d) - binom(l+d, d-m-1)` when
/// `m < d <= l + m`, and zero otherwise.
pub fn trapezoid_closed_form(m: u64, r: ReviewCount) -> BigUint {
    let (l, d) = (u64::from(r.likes), u64::from(r.dislikes));
    let n = l + d;
    if d <= m {
        binomial(n, d)
    } else if d <= l + m {
        binomial(n, d) - binomial(n, d - m - 1)
    } else {
        BigUint::zero()
    }
}
