//! Identity-based statistics.
//!
//! Under identity-based sampling the state that matters is the vector of
//! distinct counts `S(t)` and the epoch `t`. The stopping statistic is
//!
//! ```text
//! Y_{a,b}(t) = T1(α) - sup_{d' : d'_a <= d'_b} f_t(d')
//! f_t(d')    = Σ_{j observed} ∫_{-1}^{S_j} ln(d'_j - v) dv - t ln Σ_i d'_i
//! ```
//!
//! where `T1(α)` is the prior-weighted likelihood summed over the box
//! `S_j <= d'_j <= α S_j`. The supremum of `f_t` is reached on a one-parameter
//! curve `d'(γ)` and `γ₀` is the unique root of `ln(1/γ) Σ_i d'_i(γ) = t`.
//! Roots are found by bisection on `λ = ln(1/γ)`, which keeps `γ₀` resolvable
//! when it is far below machine epsilon (long runs on exhausted populations).

use crate::error::{Error, Result};
use crate::model::{activation_boundary, Observation, PriorSpec};
use crate::numeric::{bisect_decreasing, ln_gamma, log_add_exp, log_sum_exp, top_two};

/// Smallest `λ` tried, i.e. `γ = 1 - 1e-12`.
const LAMBDA_MIN: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;
/// Residual target for `g(γ₀)`; the root is refined further if the bracket allows.
pub const ROOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSolve {
    pub gamma0: f64,
    /// `ln(1/γ₀)`.
    pub lambda0: f64,
    /// Residual `g(γ₀) = g₁(γ₀) - t`.
    pub g_value: f64,
    pub iterations: usize,
    /// Maximiser `d^{a,b}(γ₀)`; zero for unobserved communities outside the pair.
    pub d_star: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IbStatReport {
    pub active: bool,
    pub y: Option<f64>,
    pub a_tilde: usize,
    pub b_tilde: usize,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub gamma0: Option<f64>,
    /// Number of hypotheses in the `α`-box, `Π_j ((α - 1) S_j + 1)`.
    pub box_size: f64,
}

/// `r(γ) = sqrt((S_a - S_b)² + 4γ²(1 + S_a + S_b + S_a S_b))`.
pub fn r_of_gamma(s_a: u64, s_b: u64, gamma: f64) -> f64 {
    let (sa, sb) = (s_a as f64, s_b as f64);
    ((sa - sb).powi(2) + 4.0 * gamma * gamma * (1.0 + sa + sb + sa * sb)).sqrt()
}

/// `∫_{-1}^{S} ln(d - v) dv = (d+1)ln(d+1) - (d+1) - (d-S)ln(d-S) + (d-S)`.
pub fn log_integral_term(d: f64, s: u64) -> Result<f64> {
    let s_f = s as f64;
    if !d.is_finite() || d < s_f {
        return Err(Error::BelowSupport { d, s });
    }
    let gap = d - s_f;
    let tail = if gap > 0.0 { gap * gap.ln() - gap } else { 0.0 };
    Ok((d + 1.0) * (d + 1.0).ln() - (d + 1.0) - tail)
}

/// Which supremum of `f_t` is being taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Constraint {
    /// `d'_a <= d'_b` with `S_a >= S_b`: the constraint binds, `d'_a = d'_b`.
    Tied(usize, usize),
    /// No constraint (or a non-binding one).
    Free,
}

/// The one-parameter family of stationary points of `f_t`.
struct RelaxedProblem<'a> {
    distinct: &'a [u64],
    t: u64,
    constraint: Constraint,
}

impl RelaxedProblem<'_> {
    /// `d'_j(γ)` for every community, with `γ = e^{-λ}`.
    fn point(&self, lambda: f64) -> Vec<f64> {
        let gamma = (-lambda).exp();
        // 1 - γ and 1 - γ² without cancellation near γ = 1
        let one_minus = -(-lambda).exp_m1();
        let one_minus_sq = -(-2.0 * lambda).exp_m1();
        let free = |s: u64| {
            if s > 0 {
                (s as f64 + gamma) / one_minus
            } else {
                0.0
            }
        };
        let mut d: Vec<f64> = self.distinct.iter().map(|&s| free(s)).collect();
        if let Constraint::Tied(a, b) = self.constraint {
            let (sa, sb) = (self.distinct[a], self.distinct[b]);
            let tied = match (sa > 0, sb > 0) {
                (true, true) => {
                    (sa as f64 + sb as f64 + 2.0 * gamma * gamma + r_of_gamma(sa, sb, gamma))
                        / (2.0 * one_minus_sq)
                }
                // only one of the pair carries an integral term
                (true, false) | (false, true) => ((sa + sb) as f64 + gamma * gamma) / one_minus_sq,
                (false, false) => 0.0,
            };
            d[a] = tied;
            d[b] = tied;
        }
        d
    }

    /// `t - g₁`, decreasing in `λ`.
    fn residual(&self, lambda: f64) -> f64 {
        self.t as f64 - lambda * self.point(lambda).iter().sum::<f64>()
    }

    fn solve(&self) -> Result<GammaSolve> {
        let boundary = activation_boundary(self.distinct);
        if self.t <= boundary {
            return Err(Error::Inactive {
                t: self.t,
                boundary,
            });
        }
        let total: u64 = self.distinct.iter().sum();
        // λ Σ d' >= λ Σ S, so g₁ exceeds t past t / Σ S.
        let hi = self.t as f64 / total as f64 + 1.0;
        let (lambda0, residual, iterations) = bisect_decreasing(
            |l| self.residual(l),
            LAMBDA_MIN,
            hi,
            ROOT_TOLERANCE,
            MAX_BISECTIONS,
        );
        Ok(GammaSolve {
            gamma0: (-lambda0).exp(),
            lambda0,
            g_value: -residual,
            iterations,
            d_star: self.point(lambda0),
        })
    }

    /// `f_t` at `d'`; integral terms only over observed communities.
    fn objective(&self, d: &[f64]) -> Result<f64> {
        let mut value = -(self.t as f64) * d.iter().sum::<f64>().ln();
        for (&dj, &sj) in d.iter().zip(self.distinct) {
            if sj > 0 {
                value += log_integral_term(dj, sj)?;
            }
        }
        Ok(value)
    }
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

/// `g₁(γ) = ln(1/γ) Σ_i d^{a,b}_i(γ)` for a pair with `S_a >= S_b`.
pub fn g1(distinct: &[u64], a: usize, b: usize, gamma: f64) -> Result<f64> {
    check_pair(distinct.len(), a, b)?;
    let problem = RelaxedProblem {
        distinct,
        t: 0,
        constraint: Constraint::Tied(a, b),
    };
    let lambda = -gamma.ln();
    Ok(lambda * problem.point(lambda).iter().sum::<f64>())
}

/// Root `γ₀` of `g₁(γ) - t` for the pair `(a, b)`, `S_a >= S_b`, and the
/// constrained maximiser `d^{a,b}(γ₀)`.
pub fn solve_gamma0(distinct: &[u64], t: u64, a: usize, b: usize) -> Result<GammaSolve> {
    check_pair(distinct.len(), a, b)?;
    if distinct[a] < distinct[b] {
        return Err(Error::PairOrder { a, b });
    }
    RelaxedProblem {
        distinct,
        t,
        constraint: Constraint::Tied(a, b),
    }
    .solve()
}

/// Root for the unconstrained supremum: every observed `d'_j = (S_j + γ)/(1 - γ)`.
pub fn solve_gamma0_unconstrained(distinct: &[u64], t: u64) -> Result<GammaSolve> {
    RelaxedProblem {
        distinct,
        t,
        constraint: Constraint::Free,
    }
    .solve()
}

/// Relaxed `T₂`: the supremum of `f_t` over `{d'_a <= d'_b}`.
///
/// For `S_a >= S_b` the constraint binds; otherwise the unconstrained
/// maximiser already satisfies it.
pub fn relaxed_sup(distinct: &[u64], t: u64, a: usize, b: usize) -> Result<(f64, GammaSolve)> {
    check_pair(distinct.len(), a, b)?;
    let constraint = if distinct[a] >= distinct[b] {
        Constraint::Tied(a, b)
    } else {
        Constraint::Free
    };
    let problem = RelaxedProblem {
        distinct,
        t,
        constraint,
    };
    let solve = problem.solve()?;
    let value = problem.objective(&solve.d_star)?;
    Ok((value, solve))
}

/// Number of hypotheses in the `α`-box.
pub fn box_cardinality(distinct: &[u64], alpha: u32) -> f64 {
    distinct
        .iter()
        .map(|&s| (alpha as f64 - 1.0) * s as f64 + 1.0)
        .product()
}

/// `T₁(α) = ln Σ_{d' ∈ box} [Π_j d'_j!/(d'_j - S_j)!] P_D(d') / (Σ_i d'_i)^t`.
///
/// The box is a product set and the denominator depends on `d'` only through
/// `Σ_i d'_i`, so the sum is evaluated as a log-space convolution of the
/// per-community weights over the total, then one log-sum-exp over totals.
pub fn t1_box_sum(distinct: &[u64], t: u64, alpha: u32, prior: &PriorSpec) -> Result<f64> {
    if alpha < 1 {
        return Err(Error::InvalidParameter("alpha must be >= 1".into()));
    }
    let min_total: u64 = distinct.iter().sum();
    if min_total == 0 {
        return Err(Error::NoObservations);
    }
    let alpha = alpha as u64;
    // by_total[i] = log weight of all partial hypotheses with total min_so_far + i
    let mut by_total = vec![0.0f64];
    for &s in distinct {
        let weights: Vec<f64> = (s..=alpha * s)
            .map(|d| ln_gamma(d as f64 + 1.0) - ln_gamma((d - s) as f64 + 1.0) + prior.ln_pmf(d))
            .collect();
        if weights.len() == 1 {
            by_total.iter_mut().for_each(|v| *v += weights[0]);
            continue;
        }
        let mut next = vec![f64::NEG_INFINITY; by_total.len() + weights.len() - 1];
        for (i, &acc) in by_total.iter().enumerate() {
            for (k, &w) in weights.iter().enumerate() {
                next[i + k] = log_add_exp(next[i + k], acc + w);
            }
        }
        by_total = next;
    }
    let t = t as f64;
    Ok(log_sum_exp(by_total.iter().enumerate().map(|(i, &c)| {
        c - t * ((min_total + i as u64) as f64).ln()
    })))
}

/// Exact log-likelihood of an identity-based trace under community sizes `d'`.
///
/// Returns `-inf` when `d'` cannot produce the trace (some `d'_j < S_j(t)`).
pub fn log_likelihood_ib(hypothesis: &[u64], trace: &[Observation]) -> Result<f64> {
    let total: u64 = hypothesis.iter().sum();
    let mut seen = vec![0u64; hypothesis.len()];
    let mut value = 0.0;
    for (epoch, obs) in trace.iter().enumerate() {
        let j = obs.community;
        if j >= hypothesis.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                k: hypothesis.len(),
            });
        }
        let fresh = obs.fresh.ok_or(Error::MissingIdentity(epoch as u64 + 1))?;
        if fresh {
            if hypothesis[j] <= seen[j] {
                return Ok(f64::NEG_INFINITY);
            }
            value += ((hypothesis[j] - seen[j]) as f64).ln();
            seen[j] += 1;
        } else {
            if seen[j] == 0 {
                return Err(Error::InconsistentState(format!(
                    "epoch {}: repeat from community {} before any new individual",
                    epoch + 1,
                    j + 1
                )));
            }
            value += (seen[j] as f64).ln();
        }
    }
    if trace.is_empty() {
        return Ok(0.0);
    }
    if total == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(value - trace.len() as f64 * (total as f64).ln())
}

/// `Y_{a,b}(t) = T₁(α) - T₂` with the relaxed `T₂` of [`relaxed_sup`].
pub fn y_ab(
    distinct: &[u64],
    t: u64,
    a: usize,
    b: usize,
    alpha: u32,
    prior: &PriorSpec,
) -> Result<f64> {
    let (t2, _) = relaxed_sup(distinct, t, a, b)?;
    Ok(t1_box_sum(distinct, t, alpha, prior)? - t2)
}

/// `Y(t) = Y_{ã,b̃}(t)`, or an inactive report when `t <= Σ S_j + K^(t)`.
pub fn y_stat(distinct: &[u64], t: u64, alpha: u32, prior: &PriorSpec) -> Result<IbStatReport> {
    if distinct.len() < 2 {
        return Err(Error::TooFewCommunities(distinct.len()));
    }
    let (a_tilde, b_tilde) = top_two(distinct);
    let mut report = IbStatReport {
        active: t > activation_boundary(distinct),
        y: None,
        a_tilde,
        b_tilde,
        t1: None,
        t2: None,
        gamma0: None,
        box_size: box_cardinality(distinct, alpha),
    };
    if !report.active {
        return Ok(report);
    }
    let t1 = t1_box_sum(distinct, t, alpha, prior)?;
    let (t2, solve) = relaxed_sup(distinct, t, a_tilde, b_tilde)?;
    report.y = Some(t1 - t2);
    report.t1 = Some(t1);
    report.t2 = Some(t2);
    report.gamma0 = Some(solve.gamma0);
    Ok(report)
}

/// `max_a min_{b != a} Y_{a,b}(t)` by enumerating every ordered pair.
pub fn y_max_min(distinct: &[u64], t: u64, alpha: u32, prior: &PriorSpec) -> Result<f64> {
    let t1 = t1_box_sum(distinct, t, alpha, prior)?;
    let k = distinct.len();
    let mut best = f64::NEG_INFINITY;
    for a in 0..k {
        let mut worst = f64::INFINITY;
        for b in (0..k).filter(|&b| b != a) {
            worst = worst.min(t1 - relaxed_sup(distinct, t, a, b)?.0);
        }
        best = best.max(worst);
    }
    Ok(best)
}
