//! Brute-force reference implementations used by the test suites and the
//! hidden `--oracle` CLI flag.
//!
//! Nothing here calls into the statistic modules: every value is recomputed
//! along its own arithmetic path (grids, quadrature, enumeration, scalar
//! bisection on stationarity conditions), so agreement is evidence rather
//! than tautology. Speed is not a goal.

use crate::model::PriorSpec;

/// Log-likelihood `Σ N_i ln p_i` with `0 ln 0 = 0`.
fn loglik(counts: &[u64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&n, &pi) in counts.iter().zip(p) {
        if n > 0 {
            total += n as f64 * pi.ln();
        }
    }
    total
}

/// Best point of the simplex grid with spacing `step` satisfying `p_a <= p_b`,
/// and its log-likelihood. Supports `K ∈ {2, 3}`.
///
/// Grid coordinates are held as integers so feasibility is decided exactly.
pub fn grid_constrained_mle(counts: &[u64], a: usize, b: usize, step: f64) -> (Vec<f64>, f64) {
    let k = counts.len();
    assert!((2..=3).contains(&k), "grid search supports K in {{2, 3}}");
    assert!(a < k && b < k && a != b);
    let n = (1.0 / step).round() as i64;
    let mut best = (vec![f64::NAN; k], f64::NEG_INFINITY);
    let mut consider = |cells: &[i64]| {
        if cells[a] > cells[b] {
            return;
        }
        let p: Vec<f64> = cells.iter().map(|&c| c as f64 / n as f64).collect();
        let value = loglik(counts, &p);
        if value > best.1 {
            best = (p, value);
        }
    };
    if k == 2 {
        for i in 0..=n {
            consider(&[i, n - i]);
        }
    } else {
        for i in 0..=n {
            for j in 0..=(n - i) {
                consider(&[i, j, n - i - j]);
            }
        }
    }
    best
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut derivative = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n(x) and P_{n-1}(x)
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn_1 = if n == 1 { 1.0 } else { p0 };
            derivative = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
            let dx = pn / derivative;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * derivative * derivative)));
    }
    rule
}

/// Dirichlet(1, ..., 1) average of `Π p_i^{N_i}` by nested Gauss-Legendre
/// quadrature over the simplex. The rule is exact for `t < 2 * 24`.
pub fn numeric_dirichlet_avg(counts: &[u64]) -> f64 {
    let k = counts.len();
    assert!(k >= 2);
    let rule = gauss_legendre(24);
    // uniform density on the simplex is (K - 1)!
    let density: f64 = (1..k).map(|m| m as f64).product();
    density * nested(counts, 1.0, &rule)
}

/// `∫ Π_i p_i^{N_i}` over `{p_1..p_{m-1} >= 0, Σ <= mass}` with the last
/// coordinate set to the remaining mass.
fn nested(counts: &[u64], mass: f64, rule: &[(f64, f64)]) -> f64 {
    if counts.len() == 1 {
        return mass.powi(counts[0] as i32);
    }
    let half = mass / 2.0;
    rule.iter()
        .map(|&(x, w)| {
            let p = half * (x + 1.0);
            w * half * p.powi(counts[0] as i32) * nested(&counts[1..], mass - p, rule)
        })
        .sum()
}

/// `Σ_{l < S} ln(d - l)`, summed term by term.
fn log_falling(d: u64, s: u64) -> f64 {
    (0..s).map(|l| ((d - l) as f64).ln()).sum()
}

/// Largest discrete log-likelihood `Σ_j Σ_{l<S_j} ln(d'_j - l) - t ln Σ d'`
/// over `d' ∈ Π_j {S_j, ..., cap}` with `d'_a <= d'_b`.
pub fn enumerate_discrete_sup(distinct: &[u64], t: u64, a: usize, b: usize, cap: u64) -> f64 {
    let k = distinct.len();
    assert!(a < k && b < k && a != b);
    let tables: Vec<Vec<f64>> = distinct
        .iter()
        .map(|&s| {
            (0..=cap)
                .map(|d| if d >= s { log_falling(d, s) } else { f64::NAN })
                .collect()
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut d = distinct.to_vec();
    if d.iter().any(|&x| x > cap) {
        return best;
    }
    loop {
        let total: u64 = d.iter().sum();
        if d[a] <= d[b] && total > 0 {
            let value: f64 = d
                .iter()
                .enumerate()
                .map(|(j, &x)| tables[j][x as usize])
                .sum::<f64>()
                - t as f64 * (total as f64).ln();
            best = best.max(value);
        }
        // odometer over the box
        let mut j = 0;
        loop {
            if j == k {
                return best;
            }
            if d[j] < cap {
                d[j] += 1;
                break;
            }
            d[j] = distinct[j];
            j += 1;
        }
    }
}

/// Result of scanning `g(γ) = ln(1/γ) Σ_i d_i(γ) - t` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaScan {
    /// `(γ_lo, γ_hi)` around the first sign change; `γ_lo = 0` if it happens
    /// before the first grid point.
    pub bracket: Option<(f64, f64)>,
    pub sign_changes: usize,
    /// Whether the sampled `g` is non-increasing.
    pub monotone: bool,
}

/// Smallest root of an increasing `h` on `[lo, ∞)` reaching `target`.
fn increasing_root(h: impl Fn(f64) -> f64, lo: f64, target: f64) -> f64 {
    let mut hi = lo + 1.0;
    while h(hi) < target {
        hi = lo + 2.0 * (hi - lo);
    }
    let mut lo = lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stationary point of the relaxed objective at a given `γ`, obtained by
/// solving each coordinate's first-order condition numerically:
/// `(d - S)/(d + 1) = γ` for a free observed community, and
/// `Π_{j ∈ {a,b}} (d - S_j)/(d + 1) = γ²` for a tied pair.
pub fn stationary_point(distinct: &[u64], a: usize, b: usize, gamma: f64) -> Vec<f64> {
    let tied = distinct[a] >= distinct[b];
    let mut d = vec![0.0; distinct.len()];
    for (j, &s) in distinct.iter().enumerate() {
        if tied && (j == a || j == b) || s == 0 {
            continue;
        }
        let s = s as f64;
        d[j] = increasing_root(|x| (x - s) / (x + 1.0), s, gamma);
    }
    if tied {
        let observed: Vec<f64> = [distinct[a], distinct[b]]
            .into_iter()
            .filter(|&s| s > 0)
            .map(|s| s as f64)
            .collect();
        if !observed.is_empty() {
            let lo = observed.iter().cloned().fold(0.0, f64::max);
            let h = |x: f64| {
                observed
                    .iter()
                    .map(|&s| (x - s) / (x + 1.0))
                    .product::<f64>()
            };
            let value = increasing_root(h, lo, gamma * gamma);
            d[a] = value;
            d[b] = value;
        }
    }
    d
}

pub fn g_of_gamma(distinct: &[u64], t: u64, a: usize, b: usize, gamma: f64) -> f64 {
    let d = stationary_point(distinct, a, b, gamma);
    -gamma.ln() * d.iter().sum::<f64>() - t as f64
}

/// Evaluates `g` at `γ_i = i/(points + 1)`, `i = 1..=points`.
pub fn dense_gamma_scan(distinct: &[u64], t: u64, a: usize, b: usize, points: usize) -> GammaScan {
    let mut previous = (0.0, f64::INFINITY); // g → +∞ as γ → 0
    let mut scan = GammaScan {
        bracket: None,
        sign_changes: 0,
        monotone: true,
    };
    for i in 1..=points {
        let gamma = i as f64 / (points + 1) as f64;
        let value = g_of_gamma(distinct, t, a, b, gamma);
        if value > previous.1 {
            scan.monotone = false;
        }
        if (previous.1 > 0.0) != (value > 0.0) {
            scan.sign_changes += 1;
            if scan.bracket.is_none() {
                scan.bracket = Some((previous.0, gamma));
            }
        }
        previous = (gamma, value);
    }
    scan
}

/// Adaptive Simpson quadrature of `∫_{-1}^{S} ln(d - v) dv`.
///
/// With `w = d - v = u²` the integrand becomes `4 u ln u`, which stays bounded
/// at `d = S` where the original has a log singularity.
pub fn quadrature_log_integral(d: f64, s: u64) -> f64 {
    let f = |u: f64| if u > 0.0 { 4.0 * u * u.ln() } else { 0.0 };
    let lo = (d - s as f64).max(0.0).sqrt();
    let hi = (d + 1.0).sqrt();
    adaptive_simpson(&f, lo, hi, 1e-13, 50)
}

pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `T₁(α)` by visiting every hypothesis in the box `S_j <= d'_j <= α S_j`.
pub fn enumerate_t1(distinct: &[u64], t: u64, alpha: u32, prior: &PriorSpec) -> f64 {
    let PriorSpec::Geometric { q } = *prior;
    let ln_theta = |i: u64| q.ln() + i as f64 * (1.0 - q).ln();
    let upper: Vec<u64> = distinct.iter().map(|&s| alpha as u64 * s).collect();
    let mut d = distinct.to_vec();
    let mut terms = Vec::new();
    loop {
        let total: u64 = d.iter().sum();
        let term: f64 = d
            .iter()
            .zip(distinct)
            .map(|(&x, &s)| log_falling(x, s) + ln_theta(x))
            .sum::<f64>()
            - t as f64 * (total as f64).ln();
        terms.push(term);
        let mut j = 0;
        loop {
            if j == d.len() {
                let peak = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                return peak + terms.iter().map(|x| (x - peak).exp()).sum::<f64>().ln();
            }
            if d[j] < upper[j] {
                d[j] += 1;
                break;
            }
            d[j] = distinct[j];
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = gauss_legendre(10);
        let weight: f64 = rule.iter().map(|r| r.1).sum();
        assert!((weight - 2.0).abs() < 1e-14);
        let x8: f64 = rule.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((x8 - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_examples() {
        assert!((numeric_dirichlet_avg(&[0, 0]) - 1.0).abs() < 1e-14);
        assert!((numeric_dirichlet_avg(&[2, 0]) - 1.0 / 3.0).abs() < 1e-14);
        // B(2,2,2)/B(1,1,1) = 2 / 120
        assert!((numeric_dirichlet_avg(&[1, 1, 1]) - 1.0 / 60.0).abs() < 1e-14);
    }

    #[test]
    fn grid_examples() {
        let (p, _) = grid_constrained_mle(&[2, 0], 0, 1, 1e-3);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        let (p, _) = grid_constrained_mle(&[1, 3], 0, 1, 1e-3);
        assert!((p[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn discrete_sup_grows_with_cap() {
        let small = enumerate_discrete_sup(&[2, 1], 10, 0, 1, 10);
        let large = enumerate_discrete_sup(&[2, 1], 10, 0, 1, 50);
        assert!(large >= small);
    }

    #[test]
    fn scan_brackets_reference_root() {
        let scan = dense_gamma_scan(&[2, 1], 10, 0, 1, 10_000);
        let (lo, hi) = scan.bracket.unwrap();
        assert!(lo > 0.08 && hi < 0.09, "{lo} {hi}");
        assert_eq!(scan.sign_changes, 1);
        assert!(scan.monotone);
        // at the activation boundary g stays positive on (0, 1)
        let scan = dense_gamma_scan(&[2, 1], 5, 0, 1, 10_000);
        assert_eq!(scan.sign_changes, 0);
        assert!(scan.monotone);
    }

    #[test]
    fn quadrature_matches_hand_values() {
        // ∫_{-1}^{0} ln(1 - v) dv = 2 ln 2 - 1
        assert!((quadrature_log_integral(1.0, 0) - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-11);
        // d = S: ∫_0^{S+1} ln w dw = (S+1) ln(S+1) - (S+1)
        assert!((quadrature_log_integral(3.0, 3) - (4.0 * 4f64.ln() - 4.0)).abs() < 1e-11);
    }

    #[test]
    fn enumerate_t1_singleton_box() {
        // α = 1 collapses the box to d' = S
        let prior = PriorSpec::Geometric { q: 0.5 };
        let value = enumerate_t1(&[2, 1], 5, 1, &prior);
        let expected = 2f64.ln() + 5.0 * 0.5f64.ln() - 5.0 * 3f64.ln();
        assert!((value - expected).abs() < 1e-12);
    }
}
