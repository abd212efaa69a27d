//! Small numerical helpers shared by the statistics modules.

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln n!`.
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `n ln x` with the convention `0 ln 0 = 0`.
#[inline]
pub fn xlogy(n: f64, x: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n * x.ln()
    }
}

/// `ln(e^a + e^b)`; `-inf` is the identity.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}`; an empty or all `-inf` input yields `-inf`.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Indices of the largest and second-largest entries, lowest index on ties.
///
/// Panics if `values.len() < 2`.
pub fn top_two<T: PartialOrd + Copy>(values: &[T]) -> (usize, usize) {
    assert!(values.len() >= 2, "top_two needs at least two entries");
    let mut first = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[first] {
            first = i;
        }
    }
    let mut second = if first == 0 { 1 } else { 0 };
    for (i, v) in values.iter().enumerate() {
        if i != first && *v > values[second] {
            second = i;
        }
    }
    (first, second)
}

/// Bisection for a strictly decreasing function with `f(lo) > 0 > f(hi)`.
///
/// Stops once `|f(mid)| <= tol`, the bracket stops shrinking, or `max_iter`
/// is reached. Returns `(root, f(root), iterations)`.
pub fn bisect_decreasing<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64, usize) {
    let mut best = (lo, f(lo));
    for iter in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        let value = f(mid);
        if value.abs() < best.1.abs() {
            best = (mid, value);
        }
        if value.abs() <= tol || mid <= lo || mid >= hi {
            return (mid, value, iter);
        }
        if value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (best.0, best.1, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_two_breaks_ties_by_index() {
        assert_eq!(top_two(&[3, 3, 3]), (0, 1));
        assert_eq!(top_two(&[1, 5, 5, 2]), (1, 2));
        assert_eq!(top_two(&[0, 0, 7]), (2, 0));
        assert_eq!(top_two(&[4, 1]), (0, 1));
    }

    #[test]
    fn log_sum_exp_handles_sentinel() {
        assert_eq!(
            log_sum_exp([f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        assert!((log_sum_exp([0.0, f64::NEG_INFINITY]) - 0.0).abs() < 1e-15);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(-1000.0, -1000.0) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn bisection_finds_root() {
        let (x, fx, _) = bisect_decreasing(|x| 2.0 - x * x * x, 0.0, 2.0, 1e-12, 200);
        assert!((x - 2f64.cbrt()).abs() < 1e-10);
        assert!(fx.abs() <= 1e-12);
    }

    #[test]
    fn ln_factorial_small() {
        assert!((ln_factorial(0)).abs() < 1e-15);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-12);
    }
}
