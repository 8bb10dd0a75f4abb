//! Combinatorial solver with explicit truncation certificates.
//!
//! The probability that selling survives to review count `(l, d)` is
//! `C_m^{a,b}(l,d) * p_x(l,d)` with slopes `a = ln(p/q)`,
//! `b = ln((1-q)/(1-p))` and barrier offset `m` equal to the log-odds gap
//! between the start prior and the stopping threshold. Counts overflow
//! floats quickly, so the product is carried directly as two probability
//! masses per cell, one per product quality:
//!
//! ```text
//! good(l,d) = x     * C(l,d) * p^l (1-p)^d
//! bad(l,d)  = (1-x) * C(l,d) * q^l (1-q)^d
//! ```
//!
//! both obeying the Pascal recurrence and vanishing on barrier cells.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{at_or_above, logit, ModelParams, PricingMode, ReviewCount, BARRIER_TOL};

/// Default number of prices tried by the non-symmetric static price search.
pub const DEFAULT_STATIC_GRID: usize = 10_000;

/// Output of the series solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSolution {
    /// Stopping prior: `x*` (dynamic) or `x_min` (static).
    pub x_star: f64,
    /// Estimate of the expected discounted reward from the initial prior.
    pub value: f64,
    /// Certified bound on `|V - value|`.
    pub epsilon: f64,
    /// Last diagonal `l + d` included in the sum.
    pub t_epsilon: usize,
    pub mode: PricingMode,
}

/// Truncated value of the discounted margin series for a product of fixed quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiValue {
    pub value: f64,
    pub error: f64,
    pub t_epsilon: usize,
}

/// Stopping prior of the dynamic-pricing seller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingPrior {
    pub x_star: f64,
    /// Certified bound on `|x_star - x*|`.
    pub error: f64,
    pub phi_good: f64,
    pub phi_bad: f64,
    pub t_epsilon: usize,
}

/// Smallest `T` with `bound * delta^T / (1 - delta) <= eps`.
pub fn truncation_horizon(bound: f64, delta: f64, eps: f64) -> usize {
    if bound <= 0.0 {
        return 0;
    }
    let t = ((bound / (eps * (1.0 - delta))).ln() / (1.0 / delta).ln()).ceil();
    if t.is_finite() && t > 0.0 {
        t as usize
    } else {
        0
    }
}

/// Largest possible `|R(x)|` for any prior.
pub fn reward_bound(params: &ModelParams, mode: PricingMode) -> f64 {
    match mode {
        PricingMode::Dynamic => (params.p - params.c).max(params.c - params.q),
        PricingMode::Static { price } => (price - params.c).abs(),
    }
}

/// Barrier offset `m` in natural log-odds units: a cell `(l,d)` survives
/// iff `ln(p/q) l - ln((1-q)/(1-p)) d >= -m`.
pub fn barrier_offset(x: f64, x_stop: f64) -> f64 {
    logit(x) - logit(x_stop)
}

#[derive(Debug, Clone, Copy)]
struct Component {
    weight: f64,
    like: f64,
}

#[derive(Debug, Default)]
struct WalkTotals {
    /// `sum_t delta^t * (mass dropped by pruning at diagonal t)`.
    pruned_discounted: f64,
    /// Mass killed by the barrier on each diagonal (only when tracked).
    stopped: Vec<f64>,
}

/// Walks the surviving cells diagonal by diagonal, calling `visit(t, l, masses)`
/// for every live cell. Cells whose total mass falls below `prune` at the
/// edge of the live band are dropped and accounted in the totals.
#[allow(clippy::too_many_arguments)]
fn walk(
    comps: [Component; 2],
    a: f64,
    b: f64,
    m: f64,
    delta: f64,
    t_last: usize,
    prune: f64,
    track_stopped: bool,
    mut visit: impl FnMut(usize, usize, [f64; 2]),
) -> WalkTotals {
    let alive = |l: usize, d: usize| a * l as f64 - b * d as f64 >= -m - BARRIER_TOL;
    let mut totals = WalkTotals::default();
    if track_stopped {
        totals.stopped.push(0.0);
    }
    if !alive(0, 0) {
        if track_stopped {
            totals.stopped[0] = comps[0].weight + comps[1].weight;
        }
        return totals;
    }
    let mut prev = vec![[0.0f64; 2]; t_last + 2];
    let mut next = vec![[0.0f64; 2]; t_last + 2];
    prev[0] = [comps[0].weight, comps[1].weight];
    visit(0, 0, prev[0]);
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut disc = 1.0;
    let mut empty = false;
    for t in 1..=t_last {
        disc *= delta;
        if empty {
            if track_stopped {
                totals.stopped.push(0.0);
            }
            continue;
        }
        let mut killed = 0.0;
        let (mut new_lo, mut new_hi) = (usize::MAX, 0usize);
        for l in lo..=hi + 1 {
            let d = t - l;
            let mut cell = [0.0; 2];
            for k in 0..2 {
                let mut v = 0.0;
                if l > lo {
                    v += prev[l - 1][k] * comps[k].like;
                }
                if l <= hi && d > 0 {
                    v += prev[l][k] * (1.0 - comps[k].like);
                }
                cell[k] = v;
            }
            if alive(l, d) {
                next[l] = cell;
                if cell[0] + cell[1] > 0.0 {
                    new_lo = new_lo.min(l);
                    new_hi = new_hi.max(l);
                }
            } else {
                next[l] = [0.0; 2];
                killed += cell[0] + cell[1];
            }
        }
        if track_stopped {
            totals.stopped.push(killed);
        }
        if new_lo == usize::MAX {
            empty = true;
            continue;
        }
        if prune > 0.0 {
            let mut dropped = 0.0;
            while new_lo < new_hi && next[new_lo][0] + next[new_lo][1] < prune {
                dropped += next[new_lo][0] + next[new_lo][1];
                next[new_lo] = [0.0; 2];
                new_lo += 1;
            }
            while new_hi > new_lo && next[new_hi][0] + next[new_hi][1] < prune {
                dropped += next[new_hi][0] + next[new_hi][1];
                next[new_hi] = [0.0; 2];
                new_hi -= 1;
            }
            totals.pruned_discounted += disc * dropped;
        }
        for l in new_lo..=new_hi {
            visit(t, l, next[l]);
        }
        // Clear the stale band of `prev` before it becomes the write buffer.
        for cell in prev.iter_mut().take(hi + 1).skip(lo) {
            *cell = [0.0; 2];
        }
        std::mem::swap(&mut prev, &mut next);
        lo = new_lo;
        hi = new_hi;
    }
    totals
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid("epsilon", format!("need epsilon > 0, got {eps}")))
    }
}

fn check_prior(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("need 0 < {name} < 1, got {x}")))
    }
}

/// Survival probabilities of every cell up to a diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachGrid {
    // diagonals[t][l]
    diagonals: Vec<Vec<f64>>,
    stopped: Vec<f64>,
}

impl ReachGrid {
    /// Exact (unpruned) survival probabilities for `l + d <= t_max`.
    pub fn build(x: f64, params: &ModelParams, x_stop: f64, t_max: usize) -> Result<Self> {
        check_prior("x", x)?;
        check_prior("x_stop", x_stop)?;
        if !at_or_above(x, x_stop) {
            return Err(Error::BelowThreshold { x, x_stop });
        }
        let comps = [
            Component {
                weight: x,
                like: params.p,
            },
            Component {
                weight: 1.0 - x,
                like: params.q,
            },
        ];
        let mut diagonals: Vec<Vec<f64>> = (0..=t_max).map(|t| vec![0.0; t + 1]).collect();
        let totals = walk(
            comps,
            params.like_step(),
            params.dislike_step(),
            barrier_offset(x, x_stop),
            params.delta,
            t_max,
            0.0,
            true,
            |t, l, mass| diagonals[t][l] = mass[0] + mass[1],
        );
        Ok(Self {
            diagonals,
            stopped: totals.stopped,
        })
    }

    pub fn t_max(&self) -> usize {
        self.diagonals.len() - 1
    }

    /// Probability of surviving to exactly `(likes, dislikes)`.
    pub fn reach(&self, r: ReviewCount) -> f64 {
        self.diagonals
            .get(r.total() as usize)
            .map_or(0.0, |row| row[r.likes as usize])
    }

    /// Total surviving mass on diagonal `t`.
    pub fn surviving(&self, t: usize) -> f64 {
        self.diagonals[t].iter().sum()
    }

    /// Mass stopped on diagonal `t` (the review at step `t` pushed the prior below threshold).
    pub fn stopped_at(&self, t: usize) -> f64 {
        self.stopped[t]
    }

    /// Mass stopped at any diagonal `<= t`.
    pub fn stopped_through(&self, t: usize) -> f64 {
        self.stopped[..=t].iter().sum()
    }
}

/// Probability that selling started at `x` survives to review count `r`.
pub fn reach_probability(x: f64, params: &ModelParams, x_stop: f64, r: ReviewCount) -> Result<f64> {
    Ok(ReachGrid::build(x, params, x_stop, r.total() as usize)?.reach(r))
}

/// Discounted margin series of a product with true like probability `r`,
/// started at the stopping barrier:
/// `sum_{l,d} delta^{l+d} C_0(l,d) (r - c) r^l (1-r)^d`.
pub fn phi(r: f64, params: &ModelParams, epsilon: f64) -> Result<PhiValue> {
    check_eps(epsilon)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid("r", format!("need 0 <= r <= 1, got {r}")));
    }
    let margin = r - params.c;
    let delta = params.delta;
    let t_last = truncation_horizon(margin.abs(), delta, 0.5 * epsilon);
    let prune = prune_threshold(margin.abs(), delta, epsilon);
    let mut discounted = vec![0.0f64; t_last + 1];
    let totals = walk(
        [
            Component { weight: 1.0, like: r },
            Component {
                weight: 0.0,
                like: r,
            },
        ],
        params.like_step(),
        params.dislike_step(),
        0.0,
        delta,
        t_last,
        prune,
        false,
        |t, _, mass| discounted[t] += mass[0],
    );
    let series = discounted
        .iter()
        .rev()
        .fold(0.0, |acc, &s| acc * delta + s);
    let error = margin.abs() * delta.powf(t_last as f64 + 1.0) / (1.0 - delta)
        + margin.abs() / (1.0 - delta) * totals.pruned_discounted;
    Ok(PhiValue {
        value: margin * series,
        error,
        t_epsilon: t_last,
    })
}

fn prune_threshold(bound: f64, delta: f64, epsilon: f64) -> f64 {
    if bound <= 0.0 {
        return 0.0;
    }
    // Per-cell mass below which dropping a band edge costs at most eps/2 overall.
    epsilon * (1.0 - delta).powi(3) / (4.0 * bound)
}

/// Stopping prior `x* = Phi(q) / (Phi(q) - Phi(p))` to within `epsilon`.
pub fn stopping_prior(params: &ModelParams, epsilon: f64) -> Result<StoppingPrior> {
    check_eps(epsilon)?;
    let mut eta = 1e-3 * epsilon;
    loop {
        let good = phi(params.p, params, eta)?;
        let bad = phi(params.q, params, eta)?;
        let (u, v) = (bad.value, good.value);
        let gap = v - u;
        let err_u = bad.error;
        let err_v = good.error;
        let slack = err_u + err_v;
        if gap > slack {
            let bound = (v.abs() * err_u + u.abs() * err_v + 2.0 * err_u * err_v)
                / (gap * (gap - slack));
            if bound < epsilon {
                return Ok(StoppingPrior {
                    x_star: u / (u - v),
                    error: bound,
                    phi_good: v,
                    phi_bad: u,
                    t_epsilon: good.t_epsilon.max(bad.t_epsilon),
                });
            }
            eta = (eta * epsilon / bound * 0.5).min(eta * 0.5);
        } else {
            eta *= 1e-2;
        }
        if eta < 1e-300 {
            return Err(invalid("epsilon", "cannot certify the stopping prior"));
        }
    }
}

/// Expected discounted reward of selling from `x` while the prior stays at
/// or above `x_stop`, truncated so that `|V - value| <= epsilon`.
///
/// A start below the threshold is worth exactly zero.
pub fn expected_reward(
    x: f64,
    params: &ModelParams,
    mode: PricingMode,
    x_stop: f64,
    epsilon: f64,
) -> Result<SeriesSolution> {
    check_eps(epsilon)?;
    check_prior("x_stop", x_stop)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid("x", format!("need 0 <= x <= 1, got {x}")));
    }
    let bound = reward_bound(params, mode);
    let delta = params.delta;
    let zero = SeriesSolution {
        x_star: x_stop,
        value: 0.0,
        epsilon: 0.0,
        t_epsilon: 0,
        mode,
    };
    if x < 1.0 && !at_or_above(x, x_stop) {
        return Ok(zero);
    }
    if x >= 1.0 {
        let t = truncation_horizon(bound, delta, epsilon);
        return Ok(SeriesSolution {
            value: params.local_reward(1.0, mode) / (1.0 - delta),
            ..zero
        }
        .with_horizon(t));
    }
    let t_last = truncation_horizon(bound, delta, 0.5 * epsilon);
    let prune = prune_threshold(bound, delta, epsilon);
    let margins = match mode {
        PricingMode::Dynamic => [params.p - params.c, params.q - params.c],
        PricingMode::Static { price } => [price - params.c, price - params.c],
    };
    let mut per_diagonal = vec![0.0f64; t_last + 1];
    let totals = walk(
        [
            Component {
                weight: x,
                like: params.p,
            },
            Component {
                weight: 1.0 - x,
                like: params.q,
            },
        ],
        params.like_step(),
        params.dislike_step(),
        barrier_offset(x, x_stop),
        delta,
        t_last,
        prune,
        false,
        |t, _, mass| per_diagonal[t] += mass[0] * margins[0] + mass[1] * margins[1],
    );
    let value = per_diagonal
        .iter()
        .rev()
        .fold(0.0, |acc, &s| acc * delta + s);
    let epsilon = bound * delta.powf(t_last as f64 + 1.0) / (1.0 - delta)
        + bound / (1.0 - delta) * totals.pruned_discounted;
    Ok(SeriesSolution {
        x_star: x_stop,
        value,
        epsilon,
        t_epsilon: t_last,
        mode,
    })
}

impl SeriesSolution {
    fn with_horizon(mut self, t: usize) -> Self {
        self.t_epsilon = t;
        self
    }
}

/// Solves the seller's problem from `params.x0`: dynamic pricing uses the
/// certified `x*`, static pricing the buyers' threshold `x_min`.
pub fn solve(params: &ModelParams, mode: PricingMode, epsilon: f64) -> Result<SeriesSolution> {
    check_eps(epsilon)?;
    match mode {
        PricingMode::Dynamic => {
            // Misplacing the threshold by dx costs at most (p-q)/(1-delta)^2 * dx.
            let sensitivity = (params.p - params.q) / (1.0 - params.delta).powi(2);
            let x_tol = (0.5 * epsilon / sensitivity).min(0.5 * epsilon);
            let stop = stopping_prior(params, x_tol)?;
            let sol = expected_reward(params.x0, params, mode, stop.x_star, 0.5 * epsilon)?;
            Ok(SeriesSolution {
                epsilon: sol.epsilon + sensitivity * stop.error,
                ..sol
            })
        }
        PricingMode::Static { price } => {
            check_static_price(params, price)?;
            let x_min = params.static_threshold(price);
            if x_min >= 1.0 {
                return Ok(SeriesSolution {
                    x_star: x_min,
                    value: 0.0,
                    epsilon: 0.0,
                    t_epsilon: 0,
                    mode,
                });
            }
            expected_reward(params.x0, params, mode, x_min.max(f64::MIN_POSITIVE), epsilon)
        }
    }
}

pub(crate) fn check_static_price(params: &ModelParams, price: f64) -> Result<()> {
    if price > params.c && price <= 1.0 {
        Ok(())
    } else {
        Err(invalid(
            "price",
            format!("static price must lie in (c, 1] = ({}, 1], got {price}", params.c),
        ))
    }
}

/// Number of net dislikes the buyers tolerate at a static price before
/// they stop buying, or `None` if they do not buy at all.
pub fn tolerated_dislikes(params: &ModelParams, price: f64) -> Option<u32> {
    let x_min = params.static_threshold(price);
    if x_min <= 0.0 {
        return Some(u32::MAX);
    }
    if x_min >= 1.0 || !at_or_above(params.x0, x_min) {
        return None;
    }
    let gap = barrier_offset(params.x0, x_min) / params.dislike_step();
    let k = (gap + BARRIER_TOL).floor();
    Some(if k >= u32::MAX as f64 { u32::MAX } else { k as u32 })
}

/// One evaluated static price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticPoint {
    pub price: f64,
    pub value: f64,
    /// Net dislikes tolerated at this price (`-1` when buyers never buy).
    pub m_pi: i64,
    /// Highest price among those with the same tolerance (symmetric case only).
    pub frontier: bool,
}

/// Best static price found and everything evaluated on the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticOptimum {
    pub price: Option<f64>,
    pub value: f64,
    pub candidates: Vec<StaticPoint>,
}

/// Evaluates the static reward at one price.
pub fn static_point(params: &ModelParams, price: f64, epsilon: f64) -> Result<StaticPoint> {
    let sol = solve(params, PricingMode::Static { price }, epsilon)?;
    Ok(StaticPoint {
        price,
        value: sol.value,
        m_pi: tolerated_dislikes(params, price).map_or(-1, i64::from),
        frontier: false,
    })
}

/// Static prices on the efficient frontier of the symmetric case: for each
/// tolerance `m`, the largest price at which buyers still accept after `m`
/// net dislikes. Ordered by increasing `m`, all above cost.
pub fn frontier_prices(params: &ModelParams) -> Result<Vec<(u32, f64)>> {
    if !params.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let mut out = Vec::new();
    for k in 0u32.. {
        let x_k = params.posterior(params.x0, ReviewCount::new(0, k));
        let price = params.like_probability(x_k).min(1.0);
        if price <= params.c {
            break;
        }
        out.push((k, price));
    }
    Ok(out)
}

/// Searches the best static price.
///
/// Symmetric markets enumerate the efficient frontier; otherwise `grid`
/// equally spaced prices in `(c, xp + (1-x)q]` are tried.
pub fn optimal_static_price(
    params: &ModelParams,
    epsilon: f64,
    grid: usize,
) -> Result<StaticOptimum> {
    check_eps(epsilon)?;
    let mut candidates = Vec::new();
    if params.is_symmetric() {
        for (k, price) in frontier_prices(params)? {
            let mut point = static_point(params, price, epsilon)?;
            point.m_pi = i64::from(k);
            point.frontier = true;
            candidates.push(point);
        }
    } else {
        if grid == 0 {
            return Err(invalid("grid", "need at least one price"));
        }
        let top = params.like_probability(params.x0);
        for j in 1..=grid {
            let price = params.c + (top - params.c) * j as f64 / grid as f64;
            candidates.push(static_point(params, price, epsilon)?);
        }
    }
    let best = candidates
        .iter()
        .filter(|pt| pt.value > 0.0)
        .max_by(|l, r| l.value.total_cmp(&r.value));
    Ok(StaticOptimum {
        price: best.map(|pt| pt.price),
        value: best.map_or(0.0, |pt| pt.value),
        candidates,
    })
}

/// Static prices swept over `(c, like_probability(x0)]`, with the frontier
/// flag set on the highest price of each tolerance group.
pub fn static_sweep(params: &ModelParams, epsilon: f64, points: usize) -> Result<Vec<StaticPoint>> {
    check_eps(epsilon)?;
    if points == 0 {
        return Err(invalid("points", "need at least one price"));
    }
    let top = params.like_probability(params.x0);
    let mut sweep = Vec::with_capacity(points);
    for j in 1..=points {
        let price = params.c + (top - params.c) * j as f64 / points as f64;
        sweep.push(static_point(params, price, epsilon)?);
    }
    if params.is_symmetric() {
        for (k, price) in frontier_prices(params)? {
            let mut point = static_point(params, price, epsilon)?;
            point.m_pi = i64::from(k);
            sweep.push(point);
        }
        sweep.sort_by(|l, r| l.price.total_cmp(&r.price));
        sweep.dedup_by(|l, r| (l.price - r.price).abs() < 1e-15);
        let n = sweep.len();
        for i in 0..n {
            let next_same = i + 1 < n && sweep[i + 1].m_pi == sweep[i].m_pi;
            sweep[i].frontier = sweep[i].m_pi >= 0 && !next_same;
        }
    }
    Ok(sweep)
}
