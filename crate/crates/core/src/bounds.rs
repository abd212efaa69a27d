//! Information-theoretic lower bounds on the expected stopping time.
//!
//! Reporting and validation only; no algorithm reads these.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::numeric::xlogy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    pub g_star: f64,
    pub lb_identityless: f64,
    pub lb_identity_based: f64,
    /// `ln((N - d₂ + d₁ + 1)/N) / g*(p)`.
    pub ratio_lhs: f64,
    /// `(p₁ + p₂) ln 2 / (p₁ - p₂)`.
    pub ratio_lower: f64,
    /// Whether `ratio_lhs > ratio_lower` and the bound chain hold.
    pub holds: bool,
}

/// Binary relative entropy `kl(x, y)` with `0 ln 0 = 0`.
pub fn kl_bernoulli(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidParameter(format!(
            "kl arguments out of [0, 1]: ({x}, {y})"
        )));
    }
    if y == 0.0 || y == 1.0 {
        return if x == y {
            Ok(0.0)
        } else {
            Err(Error::InvalidParameter(format!("kl({x}, {y}) is infinite")))
        };
    }
    Ok(xlogy(x, x / y) + xlogy(1.0 - x, (1.0 - x) / (1.0 - y)))
}

fn top_two_proportions(instance: &Instance) -> (f64, f64) {
    let (d1, d2) = instance.top_two_sizes();
    let n = instance.population() as f64;
    (d1 as f64 / n, d2 as f64 / n)
}

/// `g*(p) = (p₁ + p₂) kl(p₁/(p₁ + p₂), 1/2)` for the two largest proportions.
pub fn g_star(instance: &Instance) -> f64 {
    let (p1, p2) = top_two_proportions(instance);
    let s = p1 + p2;
    // 1/2 lies strictly inside (0, 1), so kl is finite
    s * kl_bernoulli(p1 / s, 0.5).expect("finite kl")
}

fn confidence_numerator(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    // negative for δ > 1/2.4; the bound is trivially zero there
    Ok((1.0 / (2.4 * delta)).ln().max(0.0))
}

/// Identityless bound `ln(1/(2.4δ)) / g*(p)`.
pub fn lb_identityless(instance: &Instance, delta: f64) -> Result<f64> {
    Ok(confidence_numerator(delta)? / g_star(instance))
}

/// `ln((N - d₂ + d₁ + 1)/N)`.
fn identity_rate(instance: &Instance) -> f64 {
    let (d1, d2) = instance.top_two_sizes();
    let n = instance.population() as f64;
    ((n - d2 as f64 + d1 as f64 + 1.0) / n).ln()
}

/// Identity-based bound `ln(1/(2.4δ)) / ln((N - d₂ + d₁ + 1)/N)`.
pub fn lb_identity_based(instance: &Instance, delta: f64) -> Result<f64> {
    Ok(confidence_numerator(delta)? / identity_rate(instance))
}

/// Both bounds, their ratio, and the ordering chain
/// `ln((N-d₂+d₁+1)/N) > ln((N-d₂+d₁)/N) > g*(p)`.
pub fn bound_ratio_check(instance: &Instance, delta: f64) -> Result<BoundReport> {
    let (d1, d2) = instance.top_two_sizes();
    let n = instance.population() as f64;
    let (p1, p2) = top_two_proportions(instance);
    let g = g_star(instance);
    let rate_plus = identity_rate(instance);
    let rate = ((n - d2 as f64 + d1 as f64) / n).ln();
    let ratio_lhs = rate_plus / g;
    let ratio_lower = (p1 + p2) * std::f64::consts::LN_2 / (p1 - p2);
    Ok(BoundReport {
        delta,
        g_star: g,
        lb_identityless: lb_identityless(instance, delta)?,
        lb_identity_based: lb_identity_based(instance, delta)?,
        ratio_lhs,
        ratio_lower,
        holds: rate_plus > rate && rate > g && ratio_lhs > ratio_lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i2() -> Instance {
        Instance::new(vec![20, 16, 6, 4, 4]).unwrap()
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_bernoulli(0.5, 0.5).unwrap(), 0.0);
        assert!((kl_bernoulli(1.0, 0.5).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((kl_bernoulli(0.75, 0.5).unwrap() - 0.130812).abs() < 1e-6);
        assert_eq!(kl_bernoulli(0.0, 0.0).unwrap(), 0.0);
        assert!(kl_bernoulli(0.5, 1.0).is_err());
        assert!(kl_bernoulli(1.5, 0.5).is_err());
    }

    #[test]
    fn i2_values() {
        let r = bound_ratio_check(&i2(), 0.1).unwrap();
        assert!((r.g_star - 0.004454).abs() < 1e-6, "{}", r.g_star);
        assert!(
            (r.lb_identityless - 320.4).abs() < 0.1,
            "{}",
            r.lb_identityless
        );
        assert!((identity_rate(&i2()) - 0.095310).abs() < 1e-6);
        assert!(
            (r.lb_identity_based - 14.97).abs() < 0.01,
            "{}",
            r.lb_identity_based
        );
        assert!((r.ratio_lhs - 21.4).abs() < 0.05, "{}", r.ratio_lhs);
        assert!((r.ratio_lower - 6.24).abs() < 0.01, "{}", r.ratio_lower);
        assert!(r.holds);
    }

    #[test]
    fn numerator_vanishes_at_threshold() {
        assert_eq!(lb_identityless(&i2(), 1.0 / 2.4).unwrap(), 0.0);
        assert_eq!(lb_identity_based(&i2(), 0.9).unwrap(), 0.0);
        assert!(lb_identityless(&i2(), 0.0).is_err());
    }

    #[test]
    fn scaling_behaviour() {
        let base = Instance::new(vec![20, 18, 6, 3, 3]).unwrap();
        let mut last = 0.0;
        for omega in [1, 5, 10] {
            let inst = base.scaled(omega).unwrap();
            let l = lb_identityless(&inst, 0.1).unwrap();
            assert!((l - lb_identityless(&base, 0.1).unwrap()).abs() < 1e-9 * l);
            let ib = lb_identity_based(&inst, 0.1).unwrap();
            assert!(ib > last);
            last = ib;
        }
    }

    #[test]
    fn near_tie_grows_with_population() {
        let mut last = 0.0;
        for m in [10u64, 100, 1000, 10_000] {
            let inst = Instance::new(vec![m + 1, m]).unwrap();
            let b = lb_identity_based(&inst, 0.1).unwrap();
            assert!(b > last);
            last = b;
        }
    }

    #[test]
    fn smallest_instance() {
        let r = bound_ratio_check(&Instance::new(vec![2, 1]).unwrap(), 0.1).unwrap();
        assert!(r.ratio_lhs.is_finite() && r.ratio_lower.is_finite());
        assert!(r.holds);
    }
}
