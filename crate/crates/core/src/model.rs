//! Market primitives and Bayesian belief arithmetic for the two-point
//! (good/bad) quality model.
//!
//! A good product is liked with probability `p`, a bad one with probability
//! `q`. The public prior `x` is the probability that the product is good.
//! Posteriors depend only on the number of likes and dislikes seen, never on
//! their order, so most quantities here are keyed by a [`ReviewCount`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance, in log-odds units, used when comparing a prior to a stopping
/// threshold. A prior within this distance of the threshold counts as being
/// at the threshold (the buyer is indifferent and buys).
pub const BARRIER_TOL: f64 = 1e-9;

/// Default largest denominator tried by [`detect_lattice`].
pub const DEFAULT_MAX_DENOMINATOR: u64 = 1000;
/// Default acceptance tolerance for a rational approximation of the slope ratio.
pub const DEFAULT_LATTICE_TOL: f64 = 1e-9;

/// Market primitives: like probabilities, unit cost, discount and initial prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub delta: f64,
    pub x0: f64,
}

/// Pricing regime of the seller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PricingMode {
    /// Price equals the buyer's expected value every period.
    Dynamic,
    /// A single price fixed for the whole selling horizon.
    Static { price: f64 },
}

impl PricingMode {
    pub fn static_price(self) -> Option<f64> {
        match self {
            PricingMode::Dynamic => None,
            PricingMode::Static { price } => Some(price),
        }
    }
}

/// Number of likes and dislikes observed so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ReviewCount {
    pub likes: u32,
    pub dislikes: u32,
}

impl ReviewCount {
    pub const fn new(likes: u32, dislikes: u32) -> Self {
        Self { likes, dislikes }
    }

    pub fn total(self) -> u32 {
        self.likes + self.dislikes
    }
}

/// Review outcome of a single sale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Review {
    Like,
    Dislike,
}

impl ModelParams {
    /// Validates `0 <= q < c < p <= 1`, `0 < delta < 1` and `0 < x0 < 1`.
    pub fn new(p: f64, q: f64, c: f64, delta: f64, x0: f64) -> Result<Self> {
        let params = Self { p, q, c, delta, x0 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { p, q, c, delta, x0 } = *self;
        if [p, q, c, delta, x0].iter().any(|v| !v.is_finite()) {
            return Err(invalid("params", "all parameters must be finite"));
        }
        if !(0.0 <= q && q < c && c < p && p <= 1.0) {
            return Err(invalid(
                "p/q/c",
                format!("need 0 <= q < c < p <= 1, got p={p}, q={q}, c={c}"),
            ));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("need 0 < delta < 1, got {delta}")));
        }
        if !(x0 > 0.0 && x0 < 1.0) {
            return Err(invalid("x0", format!("need 0 < x0 < 1, got {x0}")));
        }
        Ok(())
    }

    /// Same market with a different initial prior.
    pub fn with_x0(&self, x0: f64) -> Result<Self> {
        Self::new(self.p, self.q, self.c, self.delta, x0)
    }

    /// True when `q = 1 - p`, i.e. one like exactly cancels one dislike.
    pub fn is_symmetric(&self) -> bool {
        (self.q - (1.0 - self.p)).abs() <= 1e-12
    }

    /// Log-odds increment of a like, `ln(p/q)`.
    pub fn like_step(&self) -> f64 {
        (self.p / self.q).ln()
    }

    /// Log-odds decrement of a dislike, `ln((1-q)/(1-p))`.
    pub fn dislike_step(&self) -> f64 {
        ((1.0 - self.q) / (1.0 - self.p)).ln()
    }

    /// Ratio of the like step to the dislike step.
    pub fn slope_ratio(&self) -> f64 {
        self.like_step() / self.dislike_step()
    }

    /// Posterior after a like: `xp / (xp + (1-x)q)`.
    pub fn like_update(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return x;
        }
        let good = x * self.p;
        good / (good + (1.0 - x) * self.q)
    }

    /// Posterior after a dislike: `x(1-p) / (x(1-p) + (1-x)(1-q))`.
    pub fn dislike_update(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return x;
        }
        let good = x * (1.0 - self.p);
        good / (good + (1.0 - x) * (1.0 - self.q))
    }

    pub fn update(&self, x: f64, review: Review) -> f64 {
        match review {
            Review::Like => self.like_update(x),
            Review::Dislike => self.dislike_update(x),
        }
    }

    /// Probability that the next buyer likes the product, `xp + (1-x)q`.
    /// This is also the buyer's expected value for the product.
    pub fn like_probability(&self, x: f64) -> f64 {
        x * self.p + (1.0 - x) * self.q
    }

    /// Log-likelihood ratio (good vs bad) of any sequence with the given counts.
    pub fn log_likelihood_ratio(&self, r: ReviewCount) -> f64 {
        let mut llr = 0.0;
        if r.likes > 0 {
            llr += f64::from(r.likes) * self.like_step();
        }
        if r.dislikes > 0 {
            llr -= f64::from(r.dislikes) * self.dislike_step();
        }
        llr
    }

    /// Posterior `x_{l,d}` after `l` likes and `d` dislikes, in log-odds space.
    pub fn posterior(&self, x: f64, r: ReviewCount) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return x;
        }
        let llr = self.log_likelihood_ratio(r);
        if llr.is_nan() {
            // Both a like under q = 0 and a dislike under p = 1: impossible history.
            return f64::NAN;
        }
        sigmoid(logit(x) + llr)
    }

    /// Probability `p_x(l,d)` of one fixed ordering of `l` likes and `d` dislikes.
    pub fn sequence_probability(&self, x: f64, r: ReviewCount) -> f64 {
        x * powu(self.p, r.likes) * powu(1.0 - self.p, r.dislikes)
            + (1.0 - x) * powu(self.q, r.likes) * powu(1.0 - self.q, r.dislikes)
    }

    /// Dynamic-pricing local reward `xp + (1-x)q - c`.
    pub fn dynamic_reward(&self, x: f64) -> f64 {
        self.like_probability(x) - self.c
    }

    /// Local reward of one sale at prior `x` under `mode`.
    pub fn local_reward(&self, x: f64, mode: PricingMode) -> f64 {
        match mode {
            PricingMode::Dynamic => self.dynamic_reward(x),
            PricingMode::Static { price } => price - self.c,
        }
    }

    /// Lowest prior at which buyers accept a static price, `(price - q)/(p - q)`.
    pub fn static_threshold(&self, price: f64) -> f64 {
        (price - self.q) / (self.p - self.q)
    }

    /// Prior at which the myopic reward `xp + (1-x)q - c` vanishes.
    pub fn myopic_threshold(&self) -> f64 {
        (self.c - self.q) / (self.p - self.q)
    }
}

/// `ln(x / (1 - x))`.
pub fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// Inverse of [`logit`], evaluated without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `true` when prior `x` is at or above `x_stop`, up to [`BARRIER_TOL`] in
/// log-odds. Selling continues exactly when this holds.
pub fn at_or_above(x: f64, x_stop: f64) -> bool {
    if x >= x_stop {
        return true;
    }
    if x <= 0.0 || x_stop >= 1.0 {
        return false;
    }
    logit(x) >= logit(x_stop) - BARRIER_TOL
}

fn powu(base: f64, n: u32) -> f64 {
    match i32::try_from(n) {
        Ok(k) => base.powi(k),
        Err(_) => base.powf(f64::from(n)),
    }
}

/// Rational structure of the reachable prior set: `ln(p/q) / ln((1-q)/(1-p)) = a/b`.
///
/// When it exists, priors line up on `x_i` with `i = a*likes - b*dislikes`,
/// a like moving `i` up by `a` and a dislike moving it down by `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub a: u64,
    pub b: u64,
    pub gamma: f64,
}

impl Lattice {
    /// Lattice index of a review count.
    pub fn net_index(&self, r: ReviewCount) -> i64 {
        self.a as i64 * i64::from(r.likes) - self.b as i64 * i64::from(r.dislikes)
    }

    /// Log-odds distance between consecutive lattice priors.
    pub fn unit(&self, params: &ModelParams) -> f64 {
        let by_like = params.like_step() / self.a as f64;
        let by_dislike = params.dislike_step() / self.b as f64;
        0.5 * (by_like + by_dislike)
    }

    /// Prior at lattice index `i` of the lattice through `x`.
    pub fn prior_at(&self, params: &ModelParams, x: f64, i: i64) -> f64 {
        sigmoid(logit(x) + i as f64 * self.unit(params))
    }
}

/// Finds `a/b` with `gcd(a,b) = 1`, `b <= max_denominator` and
/// `|gamma - a/b| <= tol` among the continued-fraction convergents of the
/// slope ratio. `None` means the prior set is treated as dense.
pub fn detect_lattice(params: &ModelParams, max_denominator: u64, tol: f64) -> Option<Lattice> {
    let gamma = params.slope_ratio();
    if !gamma.is_finite() || gamma <= 0.0 || max_denominator == 0 || tol <= 0.0 {
        return None;
    }
    let (mut h_prev, mut h) = (0u64, 1u64);
    let (mut k_prev, mut k) = (1u64, 0u64);
    let mut rest = gamma;
    for _ in 0..64 {
        let term = rest.floor();
        if term > u32::MAX as f64 {
            break;
        }
        let t = term as u64;
        let h_next = t.checked_mul(h)?.checked_add(h_prev)?;
        let k_next = t.checked_mul(k)?.checked_add(k_prev)?;
        if k_next > max_denominator {
            break;
        }
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
        if h > 0 && (gamma - h as f64 / k as f64).abs() <= tol {
            return Some(Lattice { a: h, b: k, gamma });
        }
        let frac = rest - term;
        if frac <= f64::EPSILON * rest.max(1.0) {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}
