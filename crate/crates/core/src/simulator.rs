//! Monte Carlo simulation of review streams, used as an independent check on
//! the analytic solvers.
//!
//! Each episode draws a true quality, then repeats: the buyer buys if their
//! expected value covers the price (ties buy), the review is drawn from the
//! true quality, the public belief is updated, and the discounted margin is
//! booked. The episode ends when the policy stops selling or at the horizon;
//! censored runs keep the revenue accrued so far.
//!
//! Episode `k` uses its own ChaCha8 stream seeded with
//! `splitmix64(master_seed + (k + 1) * 0x9E3779B97F4A7C15)`, and results are
//! aggregated in run order with pairwise summation, so statistics are
//! bitwise reproducible whatever the thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::extended::{self, ExtendedConfig, MeanTable, QualityDistribution};
use crate::model::{logit, sigmoid, ModelParams, PricingMode, ReviewCount, BARRIER_TOL};
use crate::series;

/// Name of the generator, reported with every result.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), per-run seeds via splitmix64";

/// Minimum horizon accepted by [`estimate_sell_forever`].
pub const MIN_SELL_FOREVER_HORIZON: usize = 10_000;

/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_901;

/// Accuracy used when the simulator computes an optimal policy itself.
const POLICY_EPSILON: f64 = 1e-10;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of episode `run` under master seed `master`.
pub fn run_seed(master: u64, run: u64) -> u64 {
    splitmix64(master.wrapping_add(run.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Market {
    /// Two-point model with its initial prior `x0`.
    Binary { params: ModelParams },
    /// General quality distribution with cost and discount.
    Extended {
        dist: QualityDistribution,
        c: f64,
        delta: f64,
    },
}

impl Market {
    fn delta(&self) -> f64 {
        match self {
            Market::Binary { params } => params.delta,
            Market::Extended { delta, .. } => *delta,
        }
    }

    fn cost(&self) -> f64 {
        match self {
            Market::Binary { params } => params.c,
            Market::Extended { c, .. } => *c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    /// Price at the buyers' expected value and stop optimally: below `x*` in
    /// the binary market, outside the continuation set of the horizon-`M`
    /// program in the extended market.
    Dynamic,
    /// One fixed price; selling ends once buyers no longer accept it.
    Static { price: f64 },
    /// Price at the buyers' expected value and stop once the prior (binary)
    /// or the mean quality (extended) falls below `x_stop`.
    Threshold { x_stop: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TrueQuality {
    /// Binary market only: like probability `p`.
    Good,
    /// Binary market only: like probability `q`.
    Bad,
    /// Drawn from the initial belief.
    FromPrior,
    /// Like probability fixed to the given value.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub market: Market,
    pub policy: Policy,
    pub true_quality: TrueQuality,
    /// Maximum number of periods per episode.
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    /// Horizon `M` of the extended program behind [`Policy::Dynamic`].
    pub extended_horizon: usize,
}

impl SimConfig {
    pub fn binary(params: ModelParams, policy: Policy) -> Self {
        Self {
            market: Market::Binary { params },
            policy,
            true_quality: TrueQuality::FromPrior,
            horizon: 3000,
            runs: 10_000,
            seed: 0,
            extended_horizon: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon", "need horizon >= 1"));
        }
        if self.runs == 0 {
            return Err(invalid("runs", "need runs >= 1"));
        }
        match &self.market {
            Market::Binary { params } => params.validate()?,
            Market::Extended { c, delta, .. } => {
                if !(0.0..=1.0).contains(c) {
                    return Err(invalid("c", format!("need 0 <= c <= 1, got {c}")));
                }
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(invalid("delta", format!("need 0 < delta < 1, got {delta}")));
                }
                if matches!(self.true_quality, TrueQuality::Good | TrueQuality::Bad) {
                    return Err(invalid(
                        "true_quality",
                        "good/bad qualities exist only in the binary market",
                    ));
                }
            }
        }
        if let TrueQuality::Fixed(v) = self.true_quality {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid("true_quality", format!("need a probability, got {v}")));
            }
        }
        match self.policy {
            Policy::Static { price } => {
                let c = self.market.cost();
                if !(price > c && price <= 1.0) {
                    return Err(invalid("price", format!("need c < price <= 1, got {price}")));
                }
            }
            Policy::Threshold { x_stop } => {
                if !(0.0..=1.0).contains(&x_stop) {
                    return Err(invalid("x_stop", format!("need 0 <= x_stop <= 1, got {x_stop}")));
                }
            }
            Policy::Dynamic => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub runs: usize,
    pub horizon: usize,
    pub mean_discounted_revenue: f64,
    /// Standard error of the mean revenue.
    pub std_error: f64,
    /// Number of runs by stop time (periods sold before stopping).
    pub stop_time_histogram: BTreeMap<usize, usize>,
    /// Runs still selling at the horizon.
    pub censored: usize,
    /// Fraction of runs alive at the horizon.
    pub survival_fraction: f64,
    /// Standard error of `survival_fraction`.
    pub survival_std_error: f64,
    /// Threshold prior actually used (binary dynamic and threshold policies).
    pub x_stop: Option<f64>,
    pub per_run_seeds: Vec<u64>,
    pub rng: String,
}

struct Episode {
    revenue: f64,
    stop_time: Option<usize>,
}

/// Concrete selling rule once the policy is resolved.
enum Plan {
    /// Binary market: sell while `logit(prior) >= cut`; price is the
    /// expected value (`dynamic`) or the fixed price.
    Binary {
        params: ModelParams,
        cut: f64,
        price: Option<f64>,
    },
    /// Extended market: means for every reachable cell, plus the rule.
    Extended {
        means: MeanTable,
        rule: ExtendedRule,
        c: f64,
    },
}

enum ExtendedRule {
    Static(f64),
    Threshold(f64),
    /// Continuation set inside the grid; beyond it, sell while `E(X) >= c`.
    Optimal(Vec<Vec<bool>>),
}

fn resolve(config: &SimConfig) -> Result<(Plan, Option<f64>)> {
    match (&config.market, config.policy) {
        (Market::Binary { params }, policy) => {
            let (x_stop, price) = match policy {
                Policy::Dynamic => (series::stopping_prior(params, POLICY_EPSILON)?.x_star, None),
                Policy::Threshold { x_stop } => (x_stop, None),
                Policy::Static { price } => (params.static_threshold(price), Some(price)),
            };
            let cut = if x_stop <= 0.0 {
                f64::NEG_INFINITY
            } else {
                logit(x_stop) - BARRIER_TOL
            };
            let reported = (price.is_none()).then_some(x_stop);
            Ok((
                Plan::Binary {
                    params: *params,
                    cut,
                    price,
                },
                reported,
            ))
        }
        (Market::Extended { dist, c, delta }, policy) => {
            let means = MeanTable::build(dist, config.horizon);
            let rule = match policy {
                Policy::Static { price } => ExtendedRule::Static(price),
                Policy::Threshold { x_stop } => ExtendedRule::Threshold(x_stop),
                Policy::Dynamic => {
                    let m = config.extended_horizon.min(config.horizon);
                    let grid_means = MeanTable::build(dist, m);
                    let sol = extended::solve_with_table(
                        &grid_means,
                        *c,
                        *delta,
                        m,
                        PricingMode::Dynamic,
                        &ExtendedConfig::default(),
                    )?;
                    ExtendedRule::Optimal(
                        sol.grid_values
                            .iter()
                            .map(|row| row.iter().map(|&v| v > 0.0).collect())
                            .collect(),
                    )
                }
            };
            Ok((Plan::Extended { means, rule, c: *c }, None))
        }
    }
}

fn like_probability(config: &SimConfig, rng: &mut ChaCha8Rng) -> f64 {
    match (&config.market, config.true_quality) {
        (_, TrueQuality::Fixed(v)) => v,
        (Market::Binary { params }, TrueQuality::Good) => params.p,
        (Market::Binary { params }, TrueQuality::Bad) => params.q,
        (Market::Binary { params }, TrueQuality::FromPrior) => {
            if rng.random::<f64>() < params.x0 {
                params.p
            } else {
                params.q
            }
        }
        (Market::Extended { dist, .. }, _) => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (&q, &w) in dist.support().iter().zip(dist.weights()) {
                acc += w;
                if u < acc {
                    return q;
                }
            }
            *dist.support().last().expect("nonempty support")
        }
    }
}

fn episode(config: &SimConfig, plan: &Plan, seed: u64) -> Episode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quality = like_probability(config, &mut rng);
    let delta = config.market.delta();
    let mut discount = 1.0;
    let mut revenue = 0.0;
    let (mut likes, mut dislikes) = (0usize, 0usize);
    for t in 0..config.horizon {
        let margin = match plan {
            Plan::Binary { params, cut, price } => {
                let lo = logit(params.x0)
                    + params.log_likelihood_ratio(ReviewCount::new(likes as u32, dislikes as u32));
                // An impossible history (like under q = 0 and dislike under p = 1).
                let lo = if lo.is_nan() { f64::NEG_INFINITY } else { lo };
                if lo < *cut {
                    return Episode {
                        revenue,
                        stop_time: Some(t),
                    };
                }
                match price {
                    Some(price) => price - params.c,
                    None => params.dynamic_reward(sigmoid(lo)),
                }
            }
            Plan::Extended { means, rule, c } => {
                let e = means.mean(likes, dislikes);
                let (sells, price) = match rule {
                    ExtendedRule::Static(price) => (e >= price - 1e-12, *price),
                    ExtendedRule::Threshold(x_stop) => (e >= x_stop - 1e-12, e),
                    ExtendedRule::Optimal(grid) => {
                        let cont = grid
                            .get(dislikes)
                            .and_then(|row| row.get(likes))
                            .copied()
                            .unwrap_or(e >= *c);
                        (cont, e)
                    }
                };
                if !sells {
                    return Episode {
                        revenue,
                        stop_time: Some(t),
                    };
                }
                price - c
            }
        };
        revenue += discount * margin;
        discount *= delta;
        if rng.random::<f64>() < quality {
            likes += 1;
        } else {
            dislikes += 1;
        }
    }
    Episode {
        revenue,
        stop_time: None,
    }
}

/// Pairwise (cascade) summation.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Simulates `config.runs` independent episodes.
pub fn run(config: &SimConfig) -> Result<SimStats> {
    config.validate()?;
    let (plan, x_stop) = resolve(config)?;
    let seeds: Vec<u64> = (0..config.runs as u64).map(|k| run_seed(config.seed, k)).collect();
    let episodes: Vec<Episode> = seeds.par_iter().map(|&s| episode(config, &plan, s)).collect();

    let n = episodes.len() as f64;
    let revenues: Vec<f64> = episodes.iter().map(|e| e.revenue).collect();
    let mean = pairwise_sum(&revenues) / n;
    let sq: Vec<f64> = revenues.iter().map(|r| (r - mean) * (r - mean)).collect();
    let var = if episodes.len() > 1 {
        pairwise_sum(&sq) / (n - 1.0)
    } else {
        0.0
    };
    let mut histogram = BTreeMap::new();
    let mut censored = 0;
    for e in &episodes {
        match e.stop_time {
            Some(t) => *histogram.entry(t).or_insert(0) += 1,
            None => censored += 1,
        }
    }
    let survival = censored as f64 / n;
    Ok(SimStats {
        runs: config.runs,
        horizon: config.horizon,
        mean_discounted_revenue: mean,
        std_error: (var / n).sqrt(),
        stop_time_histogram: histogram,
        censored,
        survival_fraction: survival,
        survival_std_error: (survival * (1.0 - survival) / n).sqrt(),
        x_stop,
        per_run_seeds: seeds,
        rng: RNG_NAME.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellForeverEstimate {
    /// Fraction of runs alive at the horizon. Runs that would stop after the
    /// horizon count as survivors, so this over-estimates the probability of
    /// selling forever.
    pub estimate: f64,
    /// 99% normal-approximation confidence radius.
    pub ci_radius: f64,
}

/// Estimates the probability of never stopping by survival at a long horizon.
pub fn estimate_sell_forever(config: &SimConfig) -> Result<SellForeverEstimate> {
    if config.horizon < MIN_SELL_FOREVER_HORIZON {
        return Err(invalid(
            "horizon",
            format!("need horizon >= {MIN_SELL_FOREVER_HORIZON}, got {}", config.horizon),
        ));
    }
    let stats = run(config)?;
    Ok(SellForeverEstimate {
        estimate: stats.survival_fraction,
        ci_radius: Z99 * stats.survival_std_error,
    })
}
