//! Property tests for the statistics, the root finder and the state model.

use proptest::prelude::*;

use mode_quest::ib::{g1, log_likelihood_ib, solve_gamma0, t1_box_sum, y_ab, y_stat};
use mode_quest::iless::{constrained_mle, iless_report, z_ab, z_tilde_ab};
use mode_quest::model::activation_boundary;
use mode_quest::numeric::{ln_gamma, log_sum_exp, top_two};
use mode_quest::oracle::{dense_gamma_scan, enumerate_t1};
use mode_quest::sampler::{read_trace, write_trace, IdentitySampler, RngStream};
use mode_quest::{Instance, Observation, ObservationState, PriorSpec};

fn counts() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..30, 2..=5).prop_filter("t > 0", |c| c.iter().sum::<u64>() > 0)
}

/// Distinct counts with at least one observed community and an active epoch.
fn active_state(k_max: usize, s_max: u64, extra: u64) -> impl Strategy<Value = (Vec<u64>, u64)> {
    (prop::collection::vec(0..=s_max, 2..=k_max), 1..=extra)
        .prop_filter("some community observed", |(s, _)| s.iter().any(|&x| x > 0))
        .prop_map(|(s, extra)| {
            let t = activation_boundary(&s) + extra;
            (s, t)
        })
}

proptest! {
    #[test]
    fn z_reverse_pair_never_larger(c in counts(), a in 0usize..5, b in 0usize..5) {
        let (a, b) = (a % c.len(), b % c.len());
        prop_assume!(a != b && c[a] >= c[b]);
        prop_assert!(z_ab(&c, b, a).unwrap() <= z_ab(&c, a, b).unwrap());
    }

    #[test]
    fn z_tilde_dominates_z(c in counts()) {
        let report = iless_report(&c).unwrap();
        prop_assert!(report.z_tilde >= report.z);
        prop_assert_eq!(report.z_tilde, z_tilde_ab(&c, report.a_hat, report.b_hat).unwrap());
    }

    #[test]
    fn constrained_mle_is_feasible(c in counts(), a in 0usize..5, b in 0usize..5) {
        let (a, b) = (a % c.len(), b % c.len());
        prop_assume!(a != b);
        let p = constrained_mle(&c, a, b).unwrap();
        prop_assert!(p[a] <= p[b]);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn t1_convolution_matches_enumeration(
        s in prop::collection::vec(0u64..=6, 2..=3),
        extra in 1u64..40,
        alpha in 1u32..=3,
        q in 0.05f64..0.9,
    ) {
        prop_assume!(s.iter().any(|&x| x > 0));
        let prior = PriorSpec::Geometric { q };
        let t = activation_boundary(&s) + extra;
        let fast = t1_box_sum(&s, t, alpha, &prior).unwrap();
        let slow = enumerate_t1(&s, t, alpha, &prior);
        prop_assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1.0), "{fast} vs {slow}");
    }

    #[test]
    fn t1_below_enumerated_superset(
        s in prop::collection::vec(0u64..=6, 2..=3),
        extra in 1u64..40,
        alpha in 1u32..=3,
    ) {
        prop_assume!(s.iter().any(|&x| x > 0));
        let prior = PriorSpec::default();
        let t = activation_boundary(&s) + extra;
        let superset = superset_t1(&s, t, &prior, 50);
        prop_assert!(t1_box_sum(&s, t, alpha, &prior).unwrap() <= superset + 1e-9);
    }

    #[test]
    fn larger_alpha_never_lowers_y((s, t) in active_state(4, 8, 80)) {
        let prior = PriorSpec::default();
        let (a, b) = top_two(&s);
        let y1 = y_ab(&s, t, a, b, 1, &prior).unwrap();
        let y3 = y_ab(&s, t, a, b, 3, &prior).unwrap();
        prop_assert!(y3 >= y1);
    }

    #[test]
    fn gamma0_decreases_with_t((s, t) in active_state(4, 12, 300)) {
        let (a, b) = top_two(&s);
        let now = solve_gamma0(&s, t, a, b).unwrap();
        let next = solve_gamma0(&s, t + 1, a, b).unwrap();
        prop_assert!(next.gamma0 < now.gamma0);
    }

    #[test]
    fn maximiser_ties_the_pair_above_its_counts((s, t) in active_state(4, 12, 300)) {
        let (a, b) = top_two(&s);
        let solve = solve_gamma0(&s, t, a, b).unwrap();
        let d = &solve.d_star;
        prop_assert!((d[a] - d[b]).abs() <= 1e-9 * d[a].max(1.0));
        prop_assert!(d[a] >= s[a] as f64);
        // d_a - S_a shrinks like γ₀; strictness is only visible above rounding
        if solve.gamma0 > 1e-6 {
            prop_assert!(d[a] > s[a] as f64);
        }
        for (j, &sj) in s.iter().enumerate() {
            prop_assert!(d[j] >= sj as f64);
        }
    }

    #[test]
    fn y_inactive_exactly_up_to_the_boundary(s in prop::collection::vec(0u64..=10, 2..=4), back in 0u64..5) {
        prop_assume!(s.iter().any(|&x| x > 0));
        let boundary = activation_boundary(&s);
        prop_assume!(boundary >= back);
        let report = y_stat(&s, boundary - back, 1, &PriorSpec::default()).unwrap();
        prop_assert!(!report.active && report.y.is_none());
        let report = y_stat(&s, boundary + 1, 1, &PriorSpec::default()).unwrap();
        prop_assert!(report.active && report.y.is_some_and(f64::is_finite));
    }

    #[test]
    fn state_invariants_along_traces(sizes in prop::collection::vec(1u64..30, 2..=5), seed: u64, steps in 1usize..400) {
        prop_assume!(Instance::new(sizes.clone()).is_ok());
        let instance = Instance::new(sizes).unwrap();
        let mut sampler = IdentitySampler::new(&instance, RngStream::new(seed, 0));
        let mut state = ObservationState::new(instance.k());
        for _ in 0..steps {
            sampler.sample_into(&mut state);
            prop_assert_eq!(state.counts().iter().sum::<u64>(), state.t());
            for j in 0..state.k() {
                prop_assert!(state.distinct()[j] <= state.counts()[j]);
                prop_assert!(state.distinct()[j] <= instance.sizes()[j]);
            }
        }
        prop_assert_eq!(state.distinct().iter().sum::<u64>(), sampler.distinct_seen());
    }

    #[test]
    fn traces_round_trip_through_csv(seed: u64, steps in 0usize..200) {
        let instance = Instance::new(vec![7, 5, 2]).unwrap();
        let mut sampler = IdentitySampler::new(&instance, RngStream::new(seed, 3));
        let trace: Vec<Observation> = (0..steps).map(|_| sampler.sample()).collect();
        let mut bytes = Vec::new();
        write_trace(&mut bytes, &trace).unwrap();
        prop_assert_eq!(read_trace(bytes.as_slice()).unwrap(), trace);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn g1_strictly_decreasing_on_grid(s in prop::collection::vec(0u64..=15, 2..=4)) {
        prop_assume!(s.iter().any(|&x| x > 0));
        let (a, b) = top_two(&s);
        let mut last = f64::INFINITY;
        for i in 1..=1000 {
            let value = g1(&s, a, b, i as f64 / 1001.0).unwrap();
            prop_assert!(value < last, "g1 not decreasing at grid point {i}");
            last = value;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn root_is_the_only_sign_change_on_fine_grid((s, t) in active_state(4, 12, 200)) {
        let (a, b) = top_two(&s);
        let scan = dense_gamma_scan(&s, t, a, b, 10_000);
        prop_assert_eq!(scan.sign_changes, 1);
        let (lo, hi) = scan.bracket.unwrap();
        let gamma0 = solve_gamma0(&s, t, a, b).unwrap().gamma0;
        prop_assert!(lo <= gamma0 && gamma0 <= hi);
    }
}

/// `ln Σ_{S_j <= d'_j <= cap} [Π d'_j!/(d'_j - S_j)!] θ(d') / (Σ d')^t` by direct enumeration.
fn superset_t1(s: &[u64], t: u64, prior: &PriorSpec, cap: u64) -> f64 {
    let mut d = s.to_vec();
    let mut terms = Vec::new();
    loop {
        let total: u64 = d.iter().sum();
        let mut term = -(t as f64) * (total as f64).ln();
        for (&dj, &sj) in d.iter().zip(s) {
            term += ln_gamma(dj as f64 + 1.0) - ln_gamma((dj - sj) as f64 + 1.0) + prior.ln_pmf(dj);
        }
        terms.push(term);
        let mut j = 0;
        loop {
            if j == d.len() {
                return log_sum_exp(terms);
            }
            if d[j] < cap {
                d[j] += 1;
                break;
            }
            d[j] = s[j];
            j += 1;
        }
    }
}

/// `T₁` equals the prior-weighted exact trace likelihood summed over the box,
/// up to the hypothesis-free factor contributed by repeat draws.
#[test]
fn t1_matches_exact_trace_likelihood() {
    let instance = Instance::new(vec![6, 4, 3]).unwrap();
    let prior = PriorSpec::Geometric { q: 0.2 };
    for trial in 0..20 {
        let mut sampler = IdentitySampler::new(&instance, RngStream::new(5, trial));
        let mut state = ObservationState::new(instance.k());
        let mut trace = Vec::new();
        let mut repeats = 0.0;
        for _ in 0..25 {
            let seen = state.distinct().to_vec();
            let obs = sampler.sample_into(&mut state);
            if obs.fresh == Some(false) {
                repeats += (seen[obs.community] as f64).ln();
            }
            trace.push(obs);
        }
        let s = state.distinct();
        for alpha in [1u32, 2] {
            let mut terms = Vec::new();
            let mut d = s.to_vec();
            'outer: loop {
                let prior_mass: f64 = d.iter().map(|&x| prior.ln_pmf(x)).sum();
                terms.push(prior_mass + log_likelihood_ib(&d, &trace).unwrap());
                for j in 0..d.len() {
                    if d[j] < alpha as u64 * s[j] {
                        d[j] += 1;
                        continue 'outer;
                    }
                    d[j] = s[j];
                }
                break;
            }
            let expected = log_sum_exp(terms) - repeats;
            let t1 = t1_box_sum(s, state.t(), alpha, &prior).unwrap();
            assert!(
                (t1 - expected).abs() < 1e-9,
                "trial {trial} alpha {alpha}: {t1} vs {expected}"
            );
        }
    }
}
