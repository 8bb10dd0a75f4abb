//! General quality model: the quality is a random `X` on a finite support
//! `Q ⊆ [0, 1]` and a buyer likes the product with probability `X`.
//!
//! The public belief is a distribution over `Q`. After `l` likes and `d`
//! dislikes its weights are proportional to `q^l (1-q)^d w0(q)`, whatever the
//! order of the reviews. A continuous prior is represented by masses on a
//! uniform grid; grid resolution and the horizon `M` are separate accuracy
//! knobs, and only the horizon error is certified.
//!
//! The value is approximated on the triangle `l + d <= M`: cells on the
//! outer diagonal are seeded with the value of ignoring all further reviews,
//! `(E(X) - c) / (1 - delta)` (clamped at zero by default), and the rest is
//! filled backwards. The result is within `(1 - c) / (1 - delta) * delta^M`
//! of the true value.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{PricingMode, Review, ReviewCount};

/// Default number of grid points for a continuous quality prior.
pub const DEFAULT_GRID_POINTS: usize = 501;
/// Default cap on the horizon `M`.
pub const DEFAULT_MAX_HORIZON: usize = 2000;

/// Slack on the static buy condition `E(X) >= price`.
const PRICE_TOL: f64 = 1e-12;

/// Belief over a finite set of quality levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
    mean: f64,
}

impl QualityDistribution {
    /// Builds a distribution from a strictly increasing support in `[0, 1]`
    /// and nonnegative weights. Weights are normalized to sum to one.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(invalid("support", "support must not be empty"));
        }
        if support.len() != weights.len() {
            return Err(invalid(
                "weights",
                format!("{} weights for {} support points", weights.len(), support.len()),
            ));
        }
        if support.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(invalid("support", "quality values must lie in [0, 1]"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("support", "quality values must be strictly increasing"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "weights must be finite and nonnegative"));
        }
        Self::normalized(support, weights)
            .ok_or_else(|| invalid("weights", "weights must have positive total mass"))
    }

    fn normalized(support: Vec<f64>, mut weights: Vec<f64>) -> Option<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return None;
        }
        weights.iter_mut().for_each(|w| *w /= total);
        let mean = dot(&support, &weights);
        Some(Self {
            support,
            weights,
            mean,
        })
    }

    /// Uniform masses on `n` evenly spaced points from `lo` to `hi` inclusive.
    pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(invalid("grid", format!("need 0 <= lo <= hi <= 1, got [{lo}, {hi}]")));
        }
        if n == 0 {
            return Err(invalid("grid", "need at least one grid point"));
        }
        if n == 1 || lo == hi {
            if lo != hi {
                return Err(invalid("grid", "a single grid point needs lo = hi"));
            }
            return Self::point_mass(lo);
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut support: Vec<f64> = (0..n).map(|k| lo + step * k as f64).collect();
        support[n - 1] = hi;
        Self::new(support, vec![1.0; n])
    }

    /// The two-point model: quality `p` with probability `x`, else `q`.
    pub fn two_point(q: f64, p: f64, x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(invalid("x", format!("need 0 <= x <= 1, got {x}")));
        }
        Self::new(vec![q, p], vec![1.0 - x, x])
    }

    pub fn point_mass(q: f64) -> Result<Self> {
        Self::new(vec![q], vec![1.0])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E(X)`, which is also the probability of the next like.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean;
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(q, w)| w * (q - m) * (q - m))
            .sum()
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Belief after one review.
///
/// Fails when the review has probability zero under the belief (a like when
/// `E(X) = 0`, a dislike when `E(X) = 1`).
pub fn update(dist: &QualityDistribution, review: Review) -> Result<QualityDistribution> {
    let (norm, factor): (f64, fn(f64) -> f64) = match review {
        Review::Like => (dist.mean, |q| q),
        Review::Dislike => (1.0 - dist.mean, |q| 1.0 - q),
    };
    if !(norm > 0.0) {
        return Err(Error::DegenerateBelief(format!(
            "a {review:?} has zero probability when E(X) = {}",
            dist.mean
        )));
    }
    let weights = dist
        .support
        .iter()
        .zip(&dist.weights)
        .map(|(&q, &w)| factor(q) * w / norm)
        .collect();
    QualityDistribution::normalized(dist.support.clone(), weights)
        .ok_or_else(|| Error::DegenerateBelief("all weights vanished after the update".into()))
}

/// `ln(q^l (1-q)^d)`, with `0 * ln 0 = 0`.
fn log_kernel(q: f64, likes: u32, dislikes: u32) -> f64 {
    let mut s = 0.0;
    if likes > 0 {
        s += f64::from(likes) * q.ln();
    }
    if dislikes > 0 {
        s += f64::from(dislikes) * (1.0 - q).ln();
    }
    s
}

/// Normalized `exp(log_w)`; `None` when every entry is `-inf`.
fn normalize_log(log_w: &[f64]) -> Option<Vec<f64>> {
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = log_w.iter().map(|&v| (v - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Some(w)
}

/// Belief after `l` likes and `d` dislikes in any order, computed in log space.
pub fn posterior_general(dist0: &QualityDistribution, r: ReviewCount) -> Result<QualityDistribution> {
    if r.total() == 0 {
        return Ok(dist0.clone());
    }
    let log_w: Vec<f64> = dist0
        .support
        .iter()
        .zip(&dist0.weights)
        .map(|(&q, &w)| w.ln() + log_kernel(q, r.likes, r.dislikes))
        .collect();
    let weights = normalize_log(&log_w).ok_or_else(|| {
        Error::DegenerateBelief(format!(
            "no support point is compatible with {} likes and {} dislikes",
            r.likes, r.dislikes
        ))
    })?;
    QualityDistribution::normalized(dist0.support.clone(), weights)
        .ok_or_else(|| Error::DegenerateBelief("posterior has no mass".into()))
}

/// Posterior means `E(X_{l,d})` for every cell with `l + d <= t_max`.
///
/// Computed once per prior and reused across costs, prices and modes.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTable {
    t_max: usize,
    // rows[d][l] = E(X_{l,d}), l <= t_max - d
    rows: Vec<Vec<f64>>,
}

impl MeanTable {
    pub fn build(dist: &QualityDistribution, t_max: usize) -> Self {
        let support = &dist.support;
        let log_w0: Vec<f64> = dist.weights.iter().map(|w| w.ln()).collect();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(t_max + 1);
        for d in 0..=t_max {
            let len = t_max - d + 1;
            let start: Vec<f64> = support
                .iter()
                .zip(&log_w0)
                .map(|(&q, &lw)| lw + log_kernel(q, 0, d as u32))
                .collect();
            let Some(mut w) = normalize_log(&start) else {
                // No support point survives d dislikes: the row is unreachable.
                let prev = rows.last().map_or(1.0, |r: &Vec<f64>| r[0]);
                rows.push(vec![prev; len]);
                continue;
            };
            let mut row = Vec::with_capacity(len);
            for _ in 0..len {
                let mean = dot(support, &w);
                row.push(mean);
                if mean > 0.0 {
                    // Walk along the row with exact like updates; weights only
                    // shrink relative to the top, so underflow is harmless.
                    w.iter_mut().zip(support).for_each(|(v, q)| *v *= q / mean);
                }
            }
            rows.push(row);
        }
        Self { t_max, rows }
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    /// `E(X_{l,d})`; panics outside the table.
    pub fn mean(&self, likes: usize, dislikes: usize) -> f64 {
        self.rows[dislikes][likes]
    }
}

/// Seed used on the outer diagonal `l + d = M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonSeed {
    /// `max(0, (E(X) - c) / (1 - delta))`: the seller may still stop.
    #[default]
    Clamped,
    /// `(E(X) - c) / (1 - delta)` as is, possibly negative.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedConfig {
    pub seed: HorizonSeed,
    pub max_horizon: usize,
}

impl Default for ExtendedConfig {
    fn default() -> Self {
        Self {
            seed: HorizonSeed::default(),
            max_horizon: DEFAULT_MAX_HORIZON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedSolution {
    /// Approximate value at the initial belief.
    pub value: f64,
    /// Horizon `M`.
    pub horizon: usize,
    /// Certified bound on the horizon error.
    pub error_bound: f64,
    /// `grid_values[d][l]` approximates the value after `l` likes and `d`
    /// dislikes, for `l + d <= M`.
    pub grid_values: Vec<Vec<f64>>,
    pub mode: PricingMode,
    pub seed: HorizonSeed,
}

impl ExtendedSolution {
    pub fn value_at(&self, likes: usize, dislikes: usize) -> f64 {
        self.grid_values[dislikes][likes]
    }

    /// Whether selling continues at `(likes, dislikes)` inside the grid.
    pub fn continues(&self, likes: usize, dislikes: usize) -> bool {
        self.value_at(likes, dislikes) > 0.0
    }

    /// Diagnostic only: the `delta^M / (M (1 - delta))` rate expected for
    /// smooth priors. It carries no constant and certifies nothing.
    pub fn smooth_prior_rate(&self, delta: f64) -> f64 {
        delta.powf(self.horizon as f64) / (self.horizon as f64 * (1.0 - delta))
    }
}

/// Horizon error bound `(1 - c) / (1 - delta) * delta^M`.
pub fn horizon_error_bound(c: f64, delta: f64, horizon: usize) -> f64 {
    (1.0 - c) / (1.0 - delta) * delta.powf(horizon as f64)
}

fn check_market(c: f64, delta: f64, mode: PricingMode) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(invalid("c", format!("need 0 <= c <= 1, got {c}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("need 0 < delta < 1, got {delta}")));
    }
    if let PricingMode::Static { price } = mode {
        if !(price >= c && price <= 1.0) {
            return Err(invalid("price", format!("static price must lie in [c, 1], got {price}")));
        }
    }
    Ok(())
}

/// Solves the horizon-`M` approximation with the default configuration.
pub fn solve_extended(
    dist0: &QualityDistribution,
    c: f64,
    delta: f64,
    horizon: usize,
    mode: PricingMode,
) -> Result<ExtendedSolution> {
    let config = ExtendedConfig::default();
    check_horizon(horizon, config.max_horizon)?;
    let table = MeanTable::build(dist0, horizon);
    solve_with_table(&table, c, delta, horizon, mode, &config)
}

fn check_horizon(horizon: usize, cap: usize) -> Result<()> {
    if horizon == 0 {
        return Err(invalid("M", "the horizon must be at least 1"));
    }
    if horizon > cap {
        return Err(Error::CapExceeded {
            what: "M",
            value: horizon,
            cap,
        });
    }
    Ok(())
}

/// Solves on a precomputed mean table (which must cover the horizon).
pub fn solve_with_table(
    table: &MeanTable,
    c: f64,
    delta: f64,
    horizon: usize,
    mode: PricingMode,
    config: &ExtendedConfig,
) -> Result<ExtendedSolution> {
    check_horizon(horizon, config.max_horizon)?;
    check_market(c, delta, mode)?;
    if table.t_max() < horizon {
        return Err(invalid(
            "M",
            format!("mean table covers {} reviews, horizon is {horizon}", table.t_max()),
        ));
    }
    let scale = 1.0 / (1.0 - delta);
    let mut grid: Vec<Vec<f64>> = (0..=horizon).map(|d| vec![0.0; horizon - d + 1]).collect();
    for d in 0..=horizon {
        let l = horizon - d;
        let e = table.mean(l, d);
        grid[d][l] = match mode {
            PricingMode::Dynamic => {
                let raw = (e - c) * scale;
                match config.seed {
                    HorizonSeed::Clamped => raw.max(0.0),
                    HorizonSeed::Raw => raw,
                }
            }
            PricingMode::Static { price } => {
                if e >= price - PRICE_TOL {
                    (price - c) * scale
                } else {
                    0.0
                }
            }
        };
    }
    for t in (0..horizon).rev() {
        for d in 0..=t {
            let l = t - d;
            let e = table.mean(l, d);
            let next = e * grid[d][l + 1] + (1.0 - e) * grid[d + 1][l];
            grid[d][l] = match mode {
                PricingMode::Dynamic => (e - c + delta * next).max(0.0),
                PricingMode::Static { price } => {
                    if e >= price - PRICE_TOL {
                        price - c + delta * next
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    let error_bound = match (mode, config.seed) {
        (PricingMode::Dynamic, HorizonSeed::Raw) => {
            (1.0 - c).max(c) * scale * delta.powf(horizon as f64)
        }
        _ => horizon_error_bound(c, delta, horizon),
    };
    Ok(ExtendedSolution {
        value: grid[0][0],
        horizon,
        error_bound,
        grid_values: grid,
        mode,
        seed: config.seed,
    })
}

/// Static revenue at each price, reusing one mean table.
pub fn price_sweep(
    table: &MeanTable,
    c: f64,
    delta: f64,
    horizon: usize,
    prices: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let config = ExtendedConfig::default();
    prices
        .iter()
        .map(|&price| {
            let sol = solve_with_table(table, c, delta, horizon, PricingMode::Static { price }, &config)?;
            Ok((price, sol.value))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub cost: f64,
    /// Best static revenue over the price grid.
    pub revenue_static: f64,
    pub best_price: f64,
    pub revenue_dynamic: f64,
}

/// Best static and dynamic revenue for each cost. Static prices are searched
/// on `price_points` evenly spaced prices in `[c, E(X)]`; buyers refuse
/// anything above the initial mean quality.
pub fn cost_sweep(
    table: &MeanTable,
    costs: &[f64],
    delta: f64,
    horizon: usize,
    price_points: usize,
) -> Result<Vec<CostPoint>> {
    let config = ExtendedConfig::default();
    costs
        .iter()
        .map(|&cost| {
            let dynamic = solve_with_table(table, cost, delta, horizon, PricingMode::Dynamic, &config)?;
            let prices = price_grid(cost, table.mean(0, 0).max(cost), price_points);
            let (best_price, revenue_static) = price_sweep(table, cost, delta, horizon, &prices)?
                .into_iter()
                .fold((cost, 0.0), |best, cand| if cand.1 > best.1 { cand } else { best });
            Ok(CostPoint {
                cost,
                revenue_static,
                best_price,
                revenue_dynamic: dynamic.value,
            })
        })
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn price_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}
