//! Parameter generators and property checks shared by the property suite
//! and the acceptance harness.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use review_pricing::catalan::CatalanTable;
use review_pricing::model::{detect_lattice, ModelParams, PricingMode, ReviewCount};
use review_pricing::series;

/// Valid markets with `0 < q < c < p < 1` and moderate discounting.
pub fn market() -> impl Strategy<Value = ModelParams> {
    (0.02f64..0.6, 0.05f64..0.95, 0.05f64..0.95, 0.3f64..0.95, 0.05f64..0.95).prop_map(
        |(q, p_frac, c_frac, delta, x0)| {
            let p = q + (0.98 - q) * p_frac;
            let c = q + (p - q) * c_frac;
            ModelParams::new(p, q, c, delta, x0).expect("generated market is valid")
        },
    )
}

/// Prior strictly inside `(0, 1)`.
pub fn prior() -> impl Strategy<Value = f64> {
    0.001f64..0.999
}

/// `p` in `(q, 1)` with `ln(p/q) / ln((1-q)/(1-p)) = a/b`, by bisection.
pub fn p_for_ratio(q: f64, a: u64, b: u64) -> Option<f64> {
    let g = |p: f64| b as f64 * (p / q).ln() - a as f64 * ((1.0 - q) / (1.0 - p)).ln();
    let (mut lo, mut hi) = (q + 1e-12, 1.0 - 1e-15);
    if !(g(lo) > 0.0 && g(hi) < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn close(lhs: f64, rhs: f64, tol: f64, what: &str) -> Result<(), TestCaseError> {
    if (lhs - rhs).abs() <= tol {
        Ok(())
    } else {
        Err(TestCaseError::fail(format!("{what}: {lhs} vs {rhs}")))
    }
}

/// `E[x_next] = x` under the public belief.
pub fn martingale(m: &ModelParams, x: f64) -> Result<(), TestCaseError> {
    let like = m.like_probability(x);
    let next = like * m.like_update(x) + (1.0 - like) * m.dislike_update(x);
    close(next, x, 1e-12, "martingale")
}

/// A like then a dislike equals a dislike then a like.
pub fn commutation(m: &ModelParams, x: f64) -> Result<(), TestCaseError> {
    let ld = m.dislike_update(m.like_update(x));
    let dl = m.like_update(m.dislike_update(x));
    close(ld, dl, 1e-12, "commutation")
}

/// On a lattice `a/b`, `b` likes and `a` dislikes return to the start.
pub fn lattice_period(q: f64, a: u64, b: u64, x: f64) -> Result<(), TestCaseError> {
    let Some(p) = p_for_ratio(q, a, b) else {
        return Err(TestCaseError::reject("no p for this ratio"));
    };
    let c = 0.5 * (p + q);
    let m = ModelParams::new(p, q, c, 0.9, x).map_err(|e| TestCaseError::reject(e.to_string()))?;
    let lattice = detect_lattice(&m, 1000, 1e-9)
        .ok_or_else(|| TestCaseError::fail(format!("no lattice for p={p}, q={q}")))?;
    let g = gcd(a, b);
    prop_assert_eq!((lattice.a, lattice.b), (a / g, b / g));
    let back = m.posterior(x, ReviewCount::new(lattice.b as u32, lattice.a as u32));
    close(back, x, 1e-9, "lattice period")
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Posteriors rise with likes and the prior, fall with dislikes.
pub fn posterior_monotone(m: &ModelParams, x: f64, l: u32, d: u32) -> Result<(), TestCaseError> {
    let base = m.posterior(x, ReviewCount::new(l, d));
    let more_likes = m.posterior(x, ReviewCount::new(l + 1, d));
    let more_dislikes = m.posterior(x, ReviewCount::new(l, d + 1));
    prop_assert!(more_likes >= base && base >= more_dislikes);
    let higher = m.posterior((x + 0.5 * (1.0 - x)).min(0.9999), ReviewCount::new(l, d));
    prop_assert!(higher >= base);
    Ok(())
}

/// The best dynamic value dominates any static price.
pub fn static_below_dynamic(m: &ModelParams, price_frac: f64) -> Result<(), TestCaseError> {
    let eps = 1e-6;
    // Prices up to p, including ones the buyers refuse at x0.
    let price = m.c + (m.p - m.c) * price_frac.max(1e-3);
    let dynamic = series::solve(m, PricingMode::Dynamic, eps).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let fixed = series::solve(m, PricingMode::Static { price }, eps).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(
        fixed.value <= dynamic.value + 2.0 * eps,
        "static {} > dynamic {}",
        fixed.value,
        dynamic.value
    );
    Ok(())
}

/// Pascal additivity on live cells and monotonicity in the offset `m`.
pub fn catalan_structure(a: f64, b: f64, m: f64) -> Result<(), TestCaseError> {
    let t_max = 18;
    let table = CatalanTable::build(a, b, m, t_max).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let wider = CatalanTable::build(a, b, m + 0.7, t_max).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for (l, d, count) in table.cells() {
        prop_assert!(count <= wider.count(l, d));
        if l + d == 0 || *count == 0u32.into() {
            continue;
        }
        let mut sum = num_bigint::BigUint::from(0u32);
        if l > 0 {
            sum += table.count(l - 1, d);
        }
        if d > 0 {
            sum += table.count(l, d - 1);
        }
        prop_assert_eq!(count, &sum);
    }
    Ok(())
}
