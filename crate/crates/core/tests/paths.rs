//! Path-by-path comparisons under common random numbers.

use mode_quest::algorithms::{
    run_ib_cme, run_ni_me, run_ni_me_1v1, run_trial, IbCmeParams, Piggyback, RuleFired,
};
use mode_quest::bench::builtin_instance;
use mode_quest::iless::iless_report;
use mode_quest::model::DEFAULT_MAX_EPOCHS;
use mode_quest::sampler::{IdentitylessSampler, RngStream};
use mode_quest::{Algorithm, ObservationState, PriorSpec, RunConfig};

const SEED: u64 = 17;

#[test]
fn pairwise_rule_never_stops_later() {
    for name in ["I1", "I2"] {
        let instance = builtin_instance(name, 1).unwrap();
        for trial in 0..100 {
            let full = run_ni_me(
                &instance,
                0.1,
                RngStream::new(SEED, trial),
                DEFAULT_MAX_EPOCHS,
            )
            .unwrap();
            let pair = run_ni_me_1v1(
                &instance,
                0.1,
                RngStream::new(SEED, trial),
                DEFAULT_MAX_EPOCHS,
            )
            .unwrap();
            assert!(
                pair.stopping_time <= full.stopping_time,
                "{name} trial {trial}"
            );
        }
    }
}

#[test]
fn ib_cme_never_stops_later_than_its_piggyback_alone() {
    let delta = 0.1;
    for name in ["I1", "I2"] {
        let instance = builtin_instance(name, 1).unwrap();
        for piggyback in [Piggyback::NiMe, Piggyback::NiMe1v1] {
            let params = IbCmeParams {
                delta,
                alpha: 1,
                prior: PriorSpec::default(),
                max_epochs: DEFAULT_MAX_EPOCHS,
                piggyback,
                check_every: 1,
            };
            for trial in 0..100 {
                let rng = || RngStream::new(SEED, trial);
                let combined = run_ib_cme(&instance, &params, rng()).unwrap();
                let alone = match piggyback {
                    Piggyback::NiMe => run_ni_me(&instance, delta / 2.0, rng(), DEFAULT_MAX_EPOCHS),
                    Piggyback::NiMe1v1 => {
                        run_ni_me_1v1(&instance, delta / 2.0, rng(), DEFAULT_MAX_EPOCHS)
                    }
                }
                .unwrap();
                assert!(
                    combined.stopping_time <= alone.stopping_time,
                    "{name} {piggyback:?} trial {trial}"
                );
                if combined.rule_fired == RuleFired::Identityless {
                    assert_eq!(combined.stopping_time, alone.stopping_time);
                    assert_eq!(combined.declared_mode, alone.declared_mode);
                }
            }
        }
    }
}

#[test]
fn identity_rule_fires_on_exhausted_population() {
    // every individual seen quickly, so the identity rule must beat the
    // identityless one on a near-tie the counts cannot resolve
    let instance = mode_quest::Instance::new(vec![3, 2]).unwrap();
    let config = RunConfig::new(Algorithm::IbCme, 0.1);
    let mut identity_stops = 0;
    for trial in 0..50 {
        let r = run_trial(&instance, &config, trial).unwrap();
        assert_eq!(r.declared_mode, Some(0));
        identity_stops += usize::from(r.rule_fired == RuleFired::IdentityBased);
    }
    assert!(
        identity_stops > 25,
        "identity rule fired {identity_stops} times"
    );
}

#[test]
fn trials_are_reproducible() {
    let instance = builtin_instance("I1", 1).unwrap();
    for algorithm in Algorithm::ALL {
        let config = RunConfig::new(algorithm, 0.1).with_seed(99);
        for trial in [0, 7, 123] {
            assert_eq!(
                run_trial(&instance, &config, trial).unwrap(),
                run_trial(&instance, &config, trial).unwrap()
            );
        }
    }
}

#[test]
fn pairwise_statistic_dominates_along_i1_traces() {
    let instance = builtin_instance("I1", 1).unwrap();
    for trial in 0..100 {
        let mut sampler = IdentitylessSampler::new(&instance, RngStream::new(SEED, trial));
        let mut state = ObservationState::new(instance.k());
        for _ in 0..2000 {
            state.record(&sampler.sample());
            let report = iless_report(state.counts()).unwrap();
            assert!(report.z_tilde >= report.z, "trial {trial} t {}", state.t());
        }
    }
}
