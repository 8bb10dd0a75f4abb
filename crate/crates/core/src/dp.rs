//! Lattice dynamic program for rational slope ratios.
//!
//! When `ln(p/q) / ln((1-q)/(1-p)) = a/b`, the priors reachable from `x0`
//! sit on a lattice `x_i` with a like moving `i -> i + a` and a dislike
//! moving `i -> i - b`. Values are seeded near `x = 1` from the boundary
//! conditions `V(1)`, `V'(1)` and propagated down the lattice.
//!
//! Two propagation schemes are available:
//!
//! * [`DpMethod::BackwardInduction`] (default) iterates the Bellman operator
//!   on the band of lattice indices between a provable stopping floor and the
//!   seeds. The operator is a `delta`-contraction, so seed errors shrink on
//!   the way down.
//! * [`DpMethod::InverseRecursion`] solves the Bellman equation at `x_{i+b}`
//!   for `V(x_i)`, walking down one index at a time. The no-stopping value
//!   `R(x)/(1-delta)` is an exact solution of that recursion and matches the
//!   linear seeds, so this scheme follows it and stops near the myopic
//!   threshold rather than at `x*`. It is kept for comparison.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{at_or_above, logit, sigmoid, Lattice, ModelParams, PricingMode};
use crate::series::check_static_price;

/// Default width of the band below `x = 1` seeded from the boundary expansion.
pub const DEFAULT_SEED_EPSILON: f64 = 1e-4;
/// Default cap on recursion steps or Bellman sweeps.
pub const DEFAULT_MAX_STEPS: usize = 100_000;
/// Default convergence tolerance of backward induction.
pub const DEFAULT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DpMethod {
    #[default]
    BackwardInduction,
    InverseRecursion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    pub epsilon: f64,
    pub method: DpMethod,
    pub max_steps: usize,
    pub tolerance: f64,
    /// Bisect over lattice offsets to locate `x*` between lattice points.
    pub refine_stop: bool,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_SEED_EPSILON,
            method: DpMethod::default(),
            max_steps: DEFAULT_MAX_STEPS,
            tolerance: DEFAULT_TOLERANCE,
            refine_stop: true,
        }
    }
}

/// Value estimates on the lattice through `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSolution {
    /// Lattice index of `lattice_priors[0]`.
    pub first_index: i64,
    /// Increasing priors `x_i` for `i = first_index, first_index + 1, ...`.
    pub lattice_priors: Vec<f64>,
    pub values: Vec<f64>,
    /// Highest index solved (not seeded).
    pub i_start: i64,
    /// Stopping index: the largest solved index with `V <= 0` (dynamic) or
    /// with the prior below the buyers' threshold (static).
    pub i_stop: i64,
    /// Prior at `i_stop`.
    pub lattice_stop_prior: f64,
    /// Estimate of the stopping prior. Equals `lattice_stop_prior` unless
    /// refinement between lattice points is enabled (dynamic mode).
    pub x_stop_estimate: f64,
    pub mode: PricingMode,
    pub epsilon: f64,
    pub method: DpMethod,
    /// Sweeps (backward induction) or recursion steps (inverse recursion) used.
    pub steps: usize,
}

impl DpSolution {
    fn slot(&self, i: i64) -> Option<usize> {
        let k = i - self.first_index;
        (k >= 0 && (k as usize) < self.values.len()).then_some(k as usize)
    }

    /// Value at lattice index `i` (zero below the solved band).
    pub fn value_at(&self, i: i64) -> f64 {
        match self.slot(i) {
            Some(k) => self.values[k],
            None if i < self.first_index => 0.0,
            None => f64::NAN,
        }
    }

    pub fn prior_at(&self, i: i64) -> Option<f64> {
        self.slot(i).map(|k| self.lattice_priors[k])
    }

    /// Value at the initial prior (index 0).
    pub fn value_at_x0(&self) -> f64 {
        self.value_at(0)
    }

    /// `(i, x_i, V(x_i))` rows in increasing index order.
    pub fn rows(&self) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        self.lattice_priors
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(k, (&x, &v))| (self.first_index + k as i64, x, v))
    }
}

/// `(V(1), V'(1))` under the given pricing mode.
pub fn boundary_conditions(params: &ModelParams, mode: PricingMode) -> Result<(f64, f64)> {
    let scale = 1.0 / (1.0 - params.delta);
    match mode {
        PricingMode::Dynamic => Ok(((params.p - params.c) * scale, (params.p - params.q) * scale)),
        PricingMode::Static { price } => {
            if !(price >= params.c && price <= 1.0) {
                return Err(invalid(
                    "price",
                    format!("static price must lie in [c, 1], got {price}"),
                ));
            }
            Ok(((price - params.c) * scale, 0.0))
        }
    }
}

/// Prior below which stopping is provably optimal under dynamic pricing.
///
/// `V` is convex with `V(0) = 0`, so `V(x) <= x V(1)`; continuing from `x`
/// is then worth at most `R(x) + delta x V(1)`, negative below this prior.
pub fn dynamic_stop_floor(params: &ModelParams) -> f64 {
    let v1 = (params.p - params.c) / (1.0 - params.delta);
    (params.c - params.q) / (params.p - params.q + params.delta * v1)
}

struct Band {
    lo0: f64,
    unit: f64,
    a: i64,
    b: i64,
    /// Lowest index carried explicitly; everything below is zero.
    first: i64,
    i_start: i64,
    /// Seeds occupy `i_start + 1 ..= i_start + a + b`.
    last: i64,
}

impl Band {
    fn prior(&self, i: i64) -> f64 {
        sigmoid(self.lo0 + i as f64 * self.unit)
    }

    fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }
}

fn layout(
    params: &ModelParams,
    lattice: &Lattice,
    x0: f64,
    mode: PricingMode,
    epsilon: f64,
) -> Result<Band> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("need 0 < epsilon < 1, got {epsilon}")));
    }
    let lo0 = logit(x0);
    let unit = lattice.unit(params);
    let (a, b) = (lattice.a as i64, lattice.b as i64);
    // Greatest i with x_i < 1 - epsilon.
    let top = (logit(1.0 - epsilon) - lo0) / unit;
    let mut i_start = top.ceil() as i64 - 1;
    if sigmoid(lo0 + (i_start + 1) as f64 * unit) < 1.0 - epsilon {
        i_start += 1;
    }
    let floor_prior = match mode {
        PricingMode::Dynamic => dynamic_stop_floor(params),
        PricingMode::Static { price } => params.static_threshold(price),
    };
    if !(floor_prior < 1.0 - epsilon) {
        return Err(Error::EmptySeedBand { epsilon });
    }
    // Lowest carried index sits `b` steps under the first index below the floor.
    let below = ((logit(floor_prior.max(1e-300)) - lo0) / unit).floor() as i64;
    let first = (below - b).min(i_start - b);
    if i_start < first {
        return Err(Error::EmptySeedBand { epsilon });
    }
    Ok(Band {
        lo0,
        unit,
        a,
        b,
        first,
        i_start,
        last: i_start + a + b,
    })
}

/// Solves on the lattice through `params.x0` with default configuration.
pub fn solve(
    params: &ModelParams,
    lattice: Option<&Lattice>,
    mode: PricingMode,
    epsilon: f64,
) -> Result<DpSolution> {
    solve_with(
        params,
        lattice,
        mode,
        &DpConfig {
            epsilon,
            ..DpConfig::default()
        },
    )
}

/// Solves on the lattice through `params.x0`.
///
/// Fails with [`Error::NoLattice`] when `lattice` is `None` (dense prior set).
pub fn solve_with(
    params: &ModelParams,
    lattice: Option<&Lattice>,
    mode: PricingMode,
    config: &DpConfig,
) -> Result<DpSolution> {
    let lattice = lattice.ok_or(Error::NoLattice)?;
    if let PricingMode::Static { price } = mode {
        check_static_price(params, price)?;
    }
    let mut sol = solve_on(params, lattice, params.x0, mode, config)?;
    if config.refine_stop
        && mode == PricingMode::Dynamic
        && config.method == DpMethod::BackwardInduction
    {
        sol.x_stop_estimate = refine_stop(params, lattice, &sol, config)?;
    }
    Ok(sol)
}

fn solve_on(
    params: &ModelParams,
    lattice: &Lattice,
    x0: f64,
    mode: PricingMode,
    config: &DpConfig,
) -> Result<DpSolution> {
    let band = layout(params, lattice, x0, mode, config.epsilon)?;
    let (v1, slope1) = boundary_conditions(params, mode)?;
    let priors: Vec<f64> = (band.first..=band.last).map(|i| band.prior(i)).collect();
    let mut values = vec![0.0; band.len()];
    for i in band.i_start + 1..=band.last {
        let k = (i - band.first) as usize;
        values[k] = v1 - (1.0 - priors[k]) * slope1;
    }
    let (i_stop, steps) = match config.method {
        DpMethod::BackwardInduction => backward_induction(params, &band, &priors, &mut values, mode, config)?,
        DpMethod::InverseRecursion => inverse_recursion(params, &band, &priors, &mut values, mode, config)?,
    };
    let stop_prior = band.prior(i_stop);
    Ok(DpSolution {
        first_index: band.first,
        lattice_priors: priors,
        values,
        i_start: band.i_start,
        i_stop,
        lattice_stop_prior: stop_prior,
        x_stop_estimate: stop_prior,
        mode,
        epsilon: config.epsilon,
        method: config.method,
        steps,
    })
}

fn sells(mode: PricingMode, params: &ModelParams, x: f64) -> bool {
    match mode {
        PricingMode::Dynamic => true,
        PricingMode::Static { price } => at_or_above(x, params.static_threshold(price)),
    }
}

fn backward_induction(
    params: &ModelParams,
    band: &Band,
    priors: &[f64],
    values: &mut [f64],
    mode: PricingMode,
    config: &DpConfig,
) -> Result<(i64, usize)> {
    let delta = params.delta;
    let n_solved = (band.i_start - band.first + 1) as usize;
    let (a, b) = (band.a as usize, band.b as usize);
    // Static: a fixed stop set, so the fixed point is a linear solve done by sweeps.
    let selling: Vec<bool> = priors.iter().map(|&x| sells(mode, params, x)).collect();
    let mut steps = 0;
    loop {
        steps += 1;
        let mut residual = 0.0f64;
        for k in (0..n_solved).rev() {
            if !selling[k] {
                values[k] = 0.0;
                continue;
            }
            let x = priors[k];
            let like = params.like_probability(x);
            let down = if k >= b { values[k - b] } else { 0.0 };
            let cont = params.local_reward(x, mode) + delta * (like * values[k + a] + (1.0 - like) * down);
            let new = match mode {
                PricingMode::Dynamic => cont.max(0.0),
                PricingMode::Static { .. } => cont,
            };
            residual = residual.max((new - values[k]).abs() / new.abs().max(1.0));
            values[k] = new;
        }
        if residual <= config.tolerance {
            break;
        }
        if steps >= config.max_steps {
            return Err(Error::NotConverged {
                sweeps: steps,
                residual,
            });
        }
    }
    let i_stop = (0..n_solved)
        .rev()
        .find(|&k| match mode {
            PricingMode::Dynamic => values[k] <= 0.0,
            PricingMode::Static { .. } => !selling[k],
        })
        .map_or(band.first - 1, |k| band.first + k as i64);
    Ok((i_stop, steps))
}

fn inverse_recursion(
    params: &ModelParams,
    band: &Band,
    priors: &[f64],
    values: &mut [f64],
    mode: PricingMode,
    config: &DpConfig,
) -> Result<(i64, usize)> {
    let delta = params.delta;
    let (a, b) = (band.a as usize, band.b as usize);
    let mut steps = 0;
    let mut k = (band.i_start - band.first) as usize;
    loop {
        let i = band.first + k as i64;
        let up = k + b;
        let x_up = priors[up];
        let like = params.like_probability(x_up);
        let v = (values[up] - params.local_reward(x_up, mode) - delta * like * values[up + a])
            / (delta * (1.0 - like));
        if !v.is_finite() {
            return Err(Error::Diverged { index: i });
        }
        values[k] = v;
        steps += 1;
        let stop = match mode {
            PricingMode::Dynamic => v <= 0.0,
            PricingMode::Static { .. } => !sells(mode, params, priors[k]),
        };
        if stop {
            for slot in values.iter_mut().take(k + 1) {
                *slot = 0.0;
            }
            return Ok((i, steps));
        }
        if k == 0 || steps >= config.max_steps {
            return Err(Error::Diverged { index: i });
        }
        k -= 1;
    }
}

/// Locates `x*` between the lattice stopping prior and the next lattice
/// prior: a prior `s` continues iff the lattice through `s` gives `V(s) > 0`.
fn refine_stop(
    params: &ModelParams,
    lattice: &Lattice,
    sol: &DpSolution,
    config: &DpConfig,
) -> Result<f64> {
    let mut lo = logit(sol.lattice_stop_prior);
    let mut hi = lo + lattice.unit(params);
    let sub = DpConfig {
        refine_stop: false,
        ..*config
    };
    for _ in 0..60 {
        if hi - lo < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = sigmoid(mid);
        let at_s = solve_on(params, lattice, s, PricingMode::Dynamic, &sub)?;
        if at_s.value_at(0) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(sigmoid(0.5 * (lo + hi)))
}
