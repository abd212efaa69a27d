//! Identityless-model statistics.
//!
//! `Z_{a,b}(t)` is the log ratio of the Dirichlet(1, ..., 1)-averaged
//! multinomial likelihood to the largest likelihood over `{p : p_a <= p_b}`.
//! Both pieces have closed forms, so everything here is a handful of
//! log-gamma and `n ln x` evaluations on the count vector.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numeric::{ln_gamma, top_two, xlogy};

#[derive(Debug, Clone, PartialEq)]
pub struct IlessStatReport {
    pub z: f64,
    pub z_tilde: f64,
    pub a_hat: usize,
    pub b_hat: usize,
    pub per_pair: Option<BTreeMap<(usize, usize), f64>>,
}

fn check_pair(k: usize, a: usize, b: usize) -> Result<()> {
    for index in [a, b] {
        if index >= k {
            return Err(Error::IndexOutOfRange { index, k });
        }
    }
    if a == b {
        return Err(Error::SamePair(a));
    }
    Ok(())
}

/// `ln[B(N_1 + 1, ..., N_K + 1) / B(1, ..., 1)]`.
pub fn log_multinomial_beta_ratio(counts: &[u64]) -> f64 {
    let k = counts.len() as f64;
    let t: u64 = counts.iter().sum();
    counts
        .iter()
        .map(|&n| ln_gamma(n as f64 + 1.0))
        .sum::<f64>()
        - ln_gamma(t as f64 + k)
        + ln_gamma(k)
}

/// `Σ_{i ∈ idx} N_i ln(N_i / t)`, skipping zero counts.
fn max_log_likelihood_part(counts: &[u64], t: f64, skip: Option<(usize, usize)>) -> f64 {
    counts
        .iter()
        .enumerate()
        .filter(|(i, _)| skip.is_none_or(|(a, b)| *i != a && *i != b))
        .map(|(_, &n)| xlogy(n as f64, n as f64 / t))
        .sum()
}

/// The GLR statistic `Z_{a,b}(t)` in closed form.
pub fn z_ab(counts: &[u64], a: usize, b: usize) -> Result<f64> {
    check_pair(counts.len(), a, b)?;
    let t: u64 = counts.iter().sum();
    if t == 0 {
        return Err(Error::NoObservations);
    }
    let t = t as f64;
    let avg = log_multinomial_beta_ratio(counts);
    // Pooling a tie is a no-op; skipping it keeps one summation order.
    if counts[a] > counts[b] {
        let merged = (counts[a] + counts[b]) as f64;
        Ok(avg
            - max_log_likelihood_part(counts, t, Some((a, b)))
            - xlogy(merged, merged / (2.0 * t)))
    } else {
        Ok(avg - max_log_likelihood_part(counts, t, None))
    }
}

/// Pairwise statistic `ln B(N_a + 1, N_b + 1) + (N_a + N_b) ln 2`.
pub fn z_tilde_pair(n_a: u64, n_b: u64) -> f64 {
    let (x, y) = (n_a as f64, n_b as f64);
    ln_gamma(x + 1.0) + ln_gamma(y + 1.0) - ln_gamma(x + y + 2.0) + (x + y) * std::f64::consts::LN_2
}

pub fn z_tilde_ab(counts: &[u64], a: usize, b: usize) -> Result<f64> {
    check_pair(counts.len(), a, b)?;
    Ok(z_tilde_pair(counts[a], counts[b]))
}

/// `Z(t) = Z_{â,b̂}(t)` and `Z̃(t) = Z̃_{â,b̂}(t)`, with `(â, b̂)` the two
/// largest counts (lowest index on ties).
pub fn iless_report(counts: &[u64]) -> Result<IlessStatReport> {
    if counts.len() < 2 {
        return Err(Error::TooFewCommunities(counts.len()));
    }
    let (a_hat, b_hat) = top_two(counts);
    Ok(IlessStatReport {
        z: z_ab(counts, a_hat, b_hat)?,
        z_tilde: z_tilde_pair(counts[a_hat], counts[b_hat]),
        a_hat,
        b_hat,
        per_pair: None,
    })
}

/// [`iless_report`] plus every ordered `Z_{a,b}(t)`; debug and oracle use only.
pub fn iless_report_with_pairs(counts: &[u64]) -> Result<IlessStatReport> {
    let mut report = iless_report(counts)?;
    report.per_pair = Some(pairwise_z(counts)?);
    Ok(report)
}

pub fn pairwise_z(counts: &[u64]) -> Result<BTreeMap<(usize, usize), f64>> {
    let k = counts.len();
    let mut out = BTreeMap::new();
    for a in 0..k {
        for b in (0..k).filter(|&b| b != a) {
            out.insert((a, b), z_ab(counts, a, b)?);
        }
    }
    Ok(out)
}

/// Maximiser of the multinomial likelihood over `{p ∈ simplex : p_a <= p_b}`.
pub fn constrained_mle(counts: &[u64], a: usize, b: usize) -> Result<Vec<f64>> {
    check_pair(counts.len(), a, b)?;
    let t: u64 = counts.iter().sum();
    if t == 0 {
        return Err(Error::NoObservations);
    }
    let t = t as f64;
    let mut p: Vec<f64> = counts.iter().map(|&n| n as f64 / t).collect();
    if counts[a] > counts[b] {
        let pooled = (counts[a] + counts[b]) as f64 / (2.0 * t);
        p[a] = pooled;
        p[b] = pooled;
    }
    Ok(p)
}

/// Multinomial log-likelihood `Σ N_i ln p_i` (0 ln 0 = 0; `-inf` if a
/// positive count meets a zero probability).
pub fn multinomial_log_likelihood(counts: &[u64], p: &[f64]) -> f64 {
    counts
        .iter()
        .zip(p)
        .map(|(&n, &pi)| xlogy(n as f64, pi))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn beta_ratio_examples() {
        assert!(log_multinomial_beta_ratio(&[0, 0]).abs() < TOL);
        assert!((log_multinomial_beta_ratio(&[2, 0]) - (1.0f64 / 3.0).ln()).abs() < TOL);
        assert!((log_multinomial_beta_ratio(&[3, 1]) - (6.0f64 / 120.0).ln()).abs() < TOL);
        assert!((log_multinomial_beta_ratio(&[3, 1]) + 2.995732).abs() < 1e-6);
    }

    #[test]
    fn z_ab_examples() {
        let z12 = z_ab(&[2, 0], 0, 1).unwrap();
        assert!((z12 - ((1.0f64 / 3.0).ln() + 2.0 * 2f64.ln())).abs() < TOL);
        assert!((z12 - 0.287682).abs() < 1e-6);
        let z21 = z_ab(&[2, 0], 1, 0).unwrap();
        assert!((z21 + 1.098612).abs() < 1e-6);
        assert!(z21 <= z12);
        let s12 = z_ab(&[1, 1], 0, 1).unwrap();
        let s21 = z_ab(&[1, 1], 1, 0).unwrap();
        assert!((s12 - s21).abs() < TOL);
    }

    #[test]
    fn z_ab_rejects_bad_pairs() {
        assert_eq!(z_ab(&[1, 2], 1, 1), Err(Error::SamePair(1)));
        assert_eq!(z_ab(&[0, 0], 0, 1), Err(Error::NoObservations));
        assert!(matches!(
            z_ab(&[1, 2], 0, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn z_stat_examples() {
        let r = iless_report(&[2, 0]).unwrap();
        assert_eq!((r.a_hat, r.b_hat), (0, 1));
        assert!((r.z - 0.287682).abs() < 1e-6);

        let r = iless_report(&[4, 4, 4, 4]).unwrap();
        assert_eq!((r.a_hat, r.b_hat), (0, 1));
        assert_eq!(r.z, z_ab(&[4, 4, 4, 4], 0, 1).unwrap());
    }

    #[test]
    fn z_tilde_examples() {
        assert!(z_tilde_pair(0, 0).abs() < TOL);
        assert!((z_tilde_pair(3, 1) - ((1.0f64 / 20.0).ln() + 4.0 * 2f64.ln())).abs() < TOL);
        assert!((z_tilde_pair(3, 1) + 0.223144).abs() < 1e-6);
        assert_eq!(z_tilde_pair(5, 5), z_tilde_ab(&[5, 5], 1, 0).unwrap());
        assert_eq!(z_tilde_ab(&[1, 1], 0, 0), Err(Error::SamePair(0)));
    }

    #[test]
    fn constrained_mle_examples() {
        assert_eq!(constrained_mle(&[2, 0], 0, 1).unwrap(), vec![0.5, 0.5]);
        assert_eq!(constrained_mle(&[1, 3], 0, 1).unwrap(), vec![0.25, 0.75]);
        let p = constrained_mle(&[3, 1, 4], 2, 0).unwrap();
        let expected = [7.0 / 16.0, 1.0 / 8.0, 7.0 / 16.0];
        for (x, y) in p.iter().zip(expected) {
            assert!((x - y).abs() < TOL);
        }
    }

    #[test]
    fn per_pair_map_is_complete() {
        let r = iless_report_with_pairs(&[5, 3, 1]).unwrap();
        let pairs = r.per_pair.unwrap();
        assert_eq!(pairs.len(), 6);
        assert_eq!(pairs[&(r.a_hat, r.b_hat)], r.z);
    }
}
