//! Data behind the standard plots: the dynamic value on the lattice, static
//! price sweeps with their efficient frontier, and the binary-vs-extended
//! price and cost sweeps.

use serde::{Deserialize, Serialize};

use crate::dp;
use crate::error::Result;
use crate::extended::{self, MeanTable, QualityDistribution};
use crate::model::{detect_lattice, ModelParams, PricingMode, DEFAULT_LATTICE_TOL, DEFAULT_MAX_DENOMINATOR};
use crate::series::{self, StaticPoint};

/// Parameters of every figure. The defaults are the reference market
/// `p = 0.6, q = 0.4, c = 0.43, delta = 0.99, x0 = 0.5` with the extended
/// prior uniform on `[0.4, 0.6]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigurePreset {
    /// Symmetric reference market (value curve, symmetric static sweep,
    /// binary side of the price and cost sweeps).
    pub binary: ModelParams,
    /// Non-symmetric market for the general static sweep.
    pub general: ModelParams,
    pub extended_lo: f64,
    pub extended_hi: f64,
    pub extended_points: usize,
    /// Horizon `M` of the extended program.
    pub extended_horizon: usize,
    /// Accuracy of the series solver.
    pub epsilon: f64,
    /// Prices per static sweep.
    pub price_points: usize,
    /// Costs in the cost sweep, spread over `(q, (p + q) / 2)`.
    pub cost_points: usize,
}

impl Default for FigurePreset {
    fn default() -> Self {
        Self {
            binary: ModelParams {
                p: 0.6,
                q: 0.4,
                c: 0.43,
                delta: 0.99,
                x0: 0.5,
            },
            general: ModelParams {
                p: 0.65,
                q: 0.3,
                c: 0.43,
                delta: 0.99,
                x0: 0.5,
            },
            extended_lo: 0.4,
            extended_hi: 0.6,
            extended_points: extended::DEFAULT_GRID_POINTS,
            extended_horizon: 1500,
            epsilon: 1e-6,
            price_points: 60,
            cost_points: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRow {
    pub index: i64,
    pub prior: f64,
    pub value: f64,
}

/// Dynamic value on the lattice through `x0`, with the stopping prior.
pub fn dp_values(params: &ModelParams) -> Result<(Vec<ValueRow>, f64)> {
    let lattice = detect_lattice(params, DEFAULT_MAX_DENOMINATOR, DEFAULT_LATTICE_TOL);
    let sol = dp::solve(params, lattice.as_ref(), PricingMode::Dynamic, dp::DEFAULT_SEED_EPSILON)?;
    let rows = sol
        .rows()
        .map(|(index, prior, value)| ValueRow { index, prior, value })
        .collect();
    Ok((rows, sol.x_stop_estimate))
}

/// Static value over prices in `(c, xp + (1-x)q]`.
pub fn static_sweep(params: &ModelParams, preset: &FigurePreset) -> Result<Vec<StaticPoint>> {
    series::static_sweep(params, preset.epsilon, preset.price_points)
}

fn extended_prior(preset: &FigurePreset) -> Result<QualityDistribution> {
    QualityDistribution::uniform_grid(preset.extended_lo, preset.extended_hi, preset.extended_points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub price: f64,
    pub revenue_binary: f64,
    pub revenue_extended: f64,
}

/// Static revenue of the binary and the extended market over prices in
/// `(c, xp + (1-x)q]`. Both markets start with the same expected quality.
pub fn price_sweep(preset: &FigurePreset) -> Result<Vec<PriceRow>> {
    let params = &preset.binary;
    let dist = extended_prior(preset)?;
    let table = MeanTable::build(&dist, preset.extended_horizon);
    let top = params.like_probability(params.x0);
    let prices: Vec<f64> = (1..=preset.price_points)
        .map(|j| params.c + (top - params.c) * j as f64 / preset.price_points as f64)
        .collect();
    let extended = extended::price_sweep(&table, params.c, params.delta, preset.extended_horizon, &prices)?;
    prices
        .iter()
        .zip(extended)
        .map(|(&price, (_, revenue_extended))| {
            Ok(PriceRow {
                price,
                revenue_binary: series::static_point(params, price, preset.epsilon)?.value,
                revenue_extended,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub cost: f64,
    pub static_binary: f64,
    pub dynamic_binary: f64,
    pub static_extended: f64,
    pub dynamic_extended: f64,
}

/// Costs evenly spread over the open interval `(q, (p + q) / 2)`.
pub fn cost_grid(params: &ModelParams, points: usize) -> Vec<f64> {
    let (lo, hi) = (params.q, 0.5 * (params.p + params.q));
    (0..points)
        .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / points as f64)
        .collect()
}

/// Best static and dynamic revenue of both markets as the cost varies.
pub fn cost_sweep(preset: &FigurePreset) -> Result<Vec<CostRow>> {
    let dist = extended_prior(preset)?;
    let table = MeanTable::build(&dist, preset.extended_horizon);
    let costs = cost_grid(&preset.binary, preset.cost_points);
    let extended = extended::cost_sweep(
        &table,
        &costs,
        preset.binary.delta,
        preset.extended_horizon,
        preset.price_points,
    )?;
    costs
        .iter()
        .zip(extended)
        .map(|(&cost, ext)| {
            let params = ModelParams { c: cost, ..preset.binary };
            params.validate()?;
            Ok(CostRow {
                cost,
                static_binary: series::optimal_static_price(&params, preset.epsilon, preset.price_points)?.value,
                dynamic_binary: series::solve(&params, PricingMode::Dynamic, preset.epsilon)?.value,
                static_extended: ext.revenue_static,
                dynamic_extended: ext.revenue_dynamic,
            })
        })
        .collect()
}
