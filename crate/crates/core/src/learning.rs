//! Does the market learn? Probabilities of selling forever and of stopping
//! although the product is good (false negatives).
//!
//! A bad product is eventually withdrawn with probability one, so
//! `P(sell forever) = x * P(sell forever | good)`. The prior is a martingale
//! stopped either never or just below `x_stop`, somewhere in
//! `[D(x_stop), x_stop)`, which sandwiches `P(sell forever)`.
//!
//! With `q = 1 - p` a like and a dislike cancel exactly, so the stopped prior
//! is a known lattice point and the probability is exact: the prior through
//! `x` hits `D(s)` where `s` is the lowest lattice prior at or above `x_stop`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{at_or_above, logit, ModelParams, ReviewCount, BARRIER_TOL};
use crate::series;
use crate::simulator::{self, Policy, SimConfig, TrueQuality};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningReport {
    pub x0: f64,
    pub x_stop: f64,
    /// Lower bound on `P(sell forever)`.
    pub lower: f64,
    /// Upper bound on `P(sell forever)`.
    pub upper: f64,
    /// Exact `P(sell forever)` in the symmetric case.
    pub exact_symmetric: Option<f64>,
    /// Lower bound on `P(sell forever | good)`.
    pub given_good_lower: f64,
}

fn check_priors(x: f64, x_stop: f64) -> Result<()> {
    if !(x_stop > 0.0 && x_stop < 1.0) {
        return Err(invalid("x_stop", format!("need 0 < x_stop < 1, got {x_stop}")));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(invalid("x", format!("need 0 < x < 1, got {x}")));
    }
    if !at_or_above(x, x_stop) {
        return Err(invalid("x", format!("prior {x} is below the threshold {x_stop}")));
    }
    Ok(())
}

/// Bounds (and, when `q = 1 - p`, the exact value) of the probability that
/// selling from prior `x` never stops under threshold `x_stop`.
pub fn sell_forever_bounds(x: f64, x_stop: f64, params: &ModelParams) -> Result<LearningReport> {
    check_priors(x, x_stop)?;
    let lower = ((x - x_stop) / (1.0 - x_stop)).max(0.0);
    let floor = params.dislike_update(x_stop);
    let upper = (x - floor) / (1.0 - floor);
    let exact_symmetric = if params.is_symmetric() {
        let budget = net_dislike_budget(x, x_stop, params)?;
        // Lowest prior on the lattice through x that is still selling.
        let last_alive = params.posterior(x, ReviewCount::new(0, (budget.m_int - 1) as u32));
        let hit = params.dislike_update(last_alive);
        Some((x - hit) / (1.0 - hit))
    } else {
        None
    };
    Ok(LearningReport {
        x0: x,
        x_stop,
        lower,
        upper,
        exact_symmetric,
        given_good_lower: ((x - x_stop) / (x * (1.0 - x_stop))).max(0.0),
    })
}

/// `P(sell forever | good)` for a symmetric market that tolerates `m - 1`
/// net dislikes: `1 - ((1 - sqrt(1 - 4p(1-p))) / (2p))^m`, zero for `m <= 0`.
pub fn symmetric_sell_forever_given_good(p: f64, m: i64) -> f64 {
    if m <= 0 {
        return 0.0;
    }
    // 1 - 4p(1-p) = (2p - 1)^2, so the root is (1-p)/p for p > 1/2.
    let root = (1.0 - 4.0 * p * (1.0 - p)).max(0.0).sqrt();
    let ratio = (1.0 - root) / (2.0 * p);
    1.0 - ratio.powf(m as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DislikeBudget {
    /// Log-odds distance from `x` down to `x_stop`, in dislike steps.
    pub m_real: f64,
    /// Smallest number of net dislikes that takes the prior strictly below `x_stop`.
    pub m_int: i64,
}

/// Net dislikes the prior `x` can absorb before falling below `x_stop`.
pub fn net_dislike_budget(x: f64, x_stop: f64, params: &ModelParams) -> Result<DislikeBudget> {
    check_priors(x, x_stop)?;
    let step = params.dislike_step();
    let m_real = ((logit(x) - logit(x_stop)) / step).max(0.0);
    let m_int = (m_real + BARRIER_TOL / step).floor() as i64 + 1;
    Ok(DislikeBudget { m_real, m_int })
}

/// How an estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Closed form for the symmetric market.
    Exact,
    /// Simulation; `ratio_std_error` is a delta-method standard error.
    MonteCarlo { runs: usize, horizon: usize, ratio_std_error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FalseNegativeReport {
    pub x0: f64,
    pub price: f64,
    /// Buyers' threshold under the static price.
    pub x_min: f64,
    /// Optimal dynamic threshold.
    pub x_star: f64,
    /// `P(stop | good)` under the static price.
    pub fn_static: f64,
    /// `P(stop | good)` under dynamic pricing.
    pub fn_dynamic: f64,
    /// `fn_static / fn_dynamic`.
    pub ratio: f64,
    /// `(1/D(x*) - 1) / (1/D(x_min) - 1)`, which treats the stopped prior as
    /// landing exactly on `D(threshold)`. Symmetric markets only.
    pub unsnapped_ratio: Option<f64>,
    pub provenance: Provenance,
}

/// Simulation budget for non-symmetric markets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloBudget {
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for MonteCarloBudget {
    fn default() -> Self {
        Self {
            runs: 20_000,
            horizon: 10_000,
            seed: 0,
        }
    }
}

/// Ratio of false-negative probabilities, static price over dynamic pricing.
/// Non-symmetric markets fall back to simulation with the default budget.
pub fn false_negative_ratio(params: &ModelParams, price: f64, epsilon: f64) -> Result<FalseNegativeReport> {
    false_negative_ratio_with(params, price, epsilon, &MonteCarloBudget::default())
}

pub fn false_negative_ratio_with(
    params: &ModelParams,
    price: f64,
    epsilon: f64,
    budget: &MonteCarloBudget,
) -> Result<FalseNegativeReport> {
    if !(price > params.c && price <= 1.0) {
        return Err(invalid("price", format!("need c < price <= 1, got {price}")));
    }
    let x0 = params.x0;
    let x_min = params.static_threshold(price);
    let x_star = series::stopping_prior(params, epsilon)?.x_star;

    if params.is_symmetric() {
        let fn_given_good = |x_stop: f64| -> Result<f64> {
            if x_stop >= 1.0 || !at_or_above(x0, x_stop) {
                return Ok(1.0);
            }
            if x_stop <= 0.0 {
                return Ok(0.0);
            }
            let m = net_dislike_budget(x0, x_stop, params)?.m_int;
            Ok(1.0 - symmetric_sell_forever_given_good(params.p, m))
        };
        let fn_static = fn_given_good(x_min)?;
        let fn_dynamic = fn_given_good(x_star)?;
        debug_assert!(fn_static >= fn_dynamic && fn_dynamic > 0.0);
        let odds = |s: f64| 1.0 / params.dislike_update(s) - 1.0;
        let unsnapped = (x_min > 0.0 && x_min < 1.0).then(|| odds(x_star) / odds(x_min));
        return Ok(FalseNegativeReport {
            x0,
            price,
            x_min,
            x_star,
            fn_static,
            fn_dynamic,
            ratio: fn_static / fn_dynamic,
            unsnapped_ratio: unsnapped,
            provenance: Provenance::Exact,
        });
    }

    let stop_fraction = |policy: Policy| -> Result<(f64, f64)> {
        let config = SimConfig {
            true_quality: TrueQuality::Good,
            horizon: budget.horizon,
            runs: budget.runs,
            seed: budget.seed,
            ..SimConfig::binary(*params, policy)
        };
        let stats = simulator::run(&config)?;
        Ok((1.0 - stats.survival_fraction, stats.survival_std_error))
    };
    let (fn_static, se_static) = stop_fraction(Policy::Static { price })?;
    let (fn_dynamic, se_dynamic) = stop_fraction(Policy::Threshold { x_stop: x_star })?;
    let ratio = fn_static / fn_dynamic;
    let rel = |v: f64, se: f64| if v > 0.0 { se / v } else { f64::INFINITY };
    let ratio_std_error = ratio * rel(fn_static, se_static).hypot(rel(fn_dynamic, se_dynamic));
    Ok(FalseNegativeReport {
        x0,
        price,
        x_min,
        x_star,
        fn_static,
        fn_dynamic,
        ratio,
        unsnapped_ratio: None,
        provenance: Provenance::MonteCarlo {
            runs: budget.runs,
            horizon: budget.horizon,
            ratio_std_error,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> ModelParams {
        ModelParams::new(0.6, 0.4, 0.43, 0.99, 0.5).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(symmetric_sell_forever_given_good(0.6, 0), 0.0);
        assert_eq!(symmetric_sell_forever_given_good(0.6, -3), 0.0);
        assert!((symmetric_sell_forever_given_good(0.6, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(symmetric_sell_forever_given_good(1.0, 4), 1.0);
    }

    #[test]
    fn closed_form_recurrence() {
        let p = 0.6;
        for m in 1..=50 {
            let lhs = symmetric_sell_forever_given_good(p, m);
            let rhs = p * symmetric_sell_forever_given_good(p, m + 1)
                + (1.0 - p) * symmetric_sell_forever_given_good(p, m - 1);
            assert!((lhs - rhs).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn budget_examples() {
        let m = sym();
        let b = net_dislike_budget(0.5, 0.15, &m).unwrap();
        assert!((b.m_real - (17.0f64 / 3.0).ln() / 1.5f64.ln()).abs() < 1e-12);
        assert_eq!(b.m_int, 5);
        let after4 = m.posterior(0.5, ReviewCount::new(0, 4));
        let after5 = m.posterior(0.5, ReviewCount::new(0, 5));
        assert!(after4 >= 0.15 && after5 < 0.15);

        let at = net_dislike_budget(0.3, 0.3, &m).unwrap();
        assert_eq!((at.m_real, at.m_int), (0.0, 1));
        assert!(net_dislike_budget(0.5, 0.0, &m).is_err());
        assert!(net_dislike_budget(0.2, 0.3, &m).is_err());
    }

    #[test]
    fn budget_nonincreasing_in_threshold() {
        let m = sym();
        let counts: Vec<i64> = (1..=20)
            .map(|k| net_dislike_budget(0.6, 0.6 * k as f64 / 20.0, &m).unwrap().m_int)
            .collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    }

    #[test]
    fn bounds_order_and_limits() {
        let m = sym();
        let r = sell_forever_bounds(0.5, 0.3, &m).unwrap();
        let exact = r.exact_symmetric.unwrap();
        assert!(r.lower < exact && exact <= r.upper + 1e-15);
        assert!(r.upper <= 1.0 && r.lower >= 0.0);
        let at = sell_forever_bounds(0.3, 0.3, &m).unwrap();
        assert_eq!(at.lower, 0.0);
        let top = sell_forever_bounds(1.0 - 1e-12, 0.3, &m).unwrap();
        assert!(top.lower > 1.0 - 1e-9 && top.upper > 1.0 - 1e-9);
        assert!(sell_forever_bounds(0.2, 0.3, &m).is_err());
    }

    #[test]
    fn exact_equals_upper_on_the_threshold_lattice() {
        // x_stop on the lattice through x: the stopped prior is exactly D(x_stop).
        let m = sym();
        let x_stop = m.posterior(0.5, ReviewCount::new(0, 3));
        let r = sell_forever_bounds(0.5, x_stop, &m).unwrap();
        assert!((r.exact_symmetric.unwrap() - r.upper).abs() < 1e-12);
        // and the closed form given good, times x, agrees.
        let given_good = symmetric_sell_forever_given_good(0.6, 4);
        assert!((0.5 * given_good - r.upper).abs() < 1e-12);
    }

    #[test]
    fn dynamic_learns_more() {
        let m = sym();
        let x_star = series::stopping_prior(&m, 1e-10).unwrap().x_star;
        for price in [0.45, 0.48, 0.5] {
            let x_min = m.static_threshold(price);
            let dynamic = sell_forever_bounds(0.5, x_star, &m).unwrap();
            let fixed = sell_forever_bounds(0.5, x_min, &m).unwrap();
            assert!(dynamic.lower >= fixed.lower && dynamic.upper >= fixed.upper);
            assert!(dynamic.exact_symmetric >= fixed.exact_symmetric);
        }
    }

    #[test]
    fn false_negative_ratio_at_least_one() {
        for delta in [0.9, 0.95, 0.99, 0.999] {
            let m = ModelParams::new(0.6, 0.4, 0.43, delta, 0.5).unwrap();
            for k in 1..=5 {
                let price = 0.43 + 0.02 * k as f64;
                let r = false_negative_ratio(&m, price, 1e-8).unwrap();
                assert!(r.ratio >= 1.0, "delta={delta} price={price}");
                assert!(r.unsnapped_ratio.unwrap() >= 1.0);
                assert!(r.fn_static >= r.fn_dynamic && r.fn_dynamic > 0.0);
            }
        }
    }

    #[test]
    fn false_negative_ratio_one_at_equal_budgets() {
        // Prices just above cost and a myopic seller share the dislike budget.
        let m = ModelParams::new(0.6, 0.4, 0.43, 0.3, 0.5).unwrap();
        let price = 0.4301;
        let r = false_negative_ratio(&m, price, 1e-12).unwrap();
        let b_static = net_dislike_budget(0.5, r.x_min, &m).unwrap().m_int;
        let b_dynamic = net_dislike_budget(0.5, r.x_star, &m).unwrap().m_int;
        assert_eq!(b_static, b_dynamic);
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn non_symmetric_falls_back_to_simulation() {
        let m = ModelParams::new(0.7, 0.2, 0.4, 0.95, 0.5).unwrap();
        let budget = MonteCarloBudget {
            runs: 2000,
            horizon: 2000,
            seed: 3,
        };
        let r = false_negative_ratio_with(&m, 0.5, 1e-8, &budget).unwrap();
        assert!(matches!(r.provenance, Provenance::MonteCarlo { .. }));
        assert!(r.unsnapped_ratio.is_none());
        assert!(r.ratio >= 1.0);
    }
}
