//! The δ-PC stopping algorithms as driver loops over a sampler.
//!
//! Every epoch draws one observation and evaluates the stopping rule(s).
//! IB-CME checks its identityless piggyback rule first and the identity-based
//! rule second; a tie in the same epoch is credited to the piggyback rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ib::y_stat;
use crate::iless::{iless_report, IlessStatReport};
use crate::model::{Algorithm, Instance, Observation, ObservationState, PriorSpec, RunConfig};
use crate::numeric::top_two;
use crate::sampler::{IdentitySampler, IdentitylessSampler, RngStream};

/// `β(t, δ) = ln((K - 1)/δ)`; independent of `t`.
pub fn threshold_beta(k: usize, delta: f64) -> f64 {
    ((k as f64 - 1.0) / delta).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleFired {
    Identityless,
    IdentityBased,
    MaxEpochsCap,
}

/// Which identityless statistic a rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Piggyback {
    NiMe,
    NiMe1v1,
}

impl Piggyback {
    fn statistic(&self, report: &IlessStatReport) -> f64 {
        match self {
            Piggyback::NiMe => report.z,
            Piggyback::NiMe1v1 => report.z_tilde,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub stopping_time: u64,
    /// 0-indexed; `None` when the epoch cap was hit.
    pub declared_mode: Option<usize>,
    pub rule_fired: RuleFired,
    /// Whether the declaration is wrong; `None` when nothing was declared.
    pub error: Option<bool>,
    /// `Σ_j S_j(τ)`; zero under identityless sampling.
    pub trace_len_distinct: u64,
}

/// Per-epoch hook; receives the new observation and the updated state.
pub trait EpochObserver {
    fn on_epoch(&mut self, obs: &Observation, state: &ObservationState);
}

impl EpochObserver for () {
    fn on_epoch(&mut self, _: &Observation, _: &ObservationState) {}
}

/// Records every observation, e.g. for a trace dump.
impl EpochObserver for Vec<Observation> {
    fn on_epoch(&mut self, obs: &Observation, _: &ObservationState) {
        self.push(*obs);
    }
}

fn finish(
    instance: &Instance,
    t: u64,
    mode: usize,
    rule: RuleFired,
    state: &ObservationState,
) -> TrialResult {
    TrialResult {
        stopping_time: t,
        declared_mode: Some(mode),
        rule_fired: rule,
        error: Some(mode != instance.mode()),
        trace_len_distinct: state.distinct().iter().sum(),
    }
}

fn capped(state: &ObservationState) -> TrialResult {
    TrialResult {
        stopping_time: state.t(),
        declared_mode: None,
        rule_fired: RuleFired::MaxEpochsCap,
        error: None,
        trace_len_distinct: state.distinct().iter().sum(),
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )))
    }
}

fn run_identityless<O: EpochObserver>(
    instance: &Instance,
    rule: Piggyback,
    delta: f64,
    rng: RngStream,
    max_epochs: u64,
    check_every: u64,
    observer: &mut O,
) -> Result<TrialResult> {
    check_delta(delta)?;
    let beta = threshold_beta(instance.k(), delta);
    let mut sampler = IdentitylessSampler::new(instance, rng);
    let mut state = ObservationState::new(instance.k());
    while state.t() < max_epochs {
        let obs = sampler.sample();
        state.record(&obs);
        observer.on_epoch(&obs, &state);
        if !state.t().is_multiple_of(check_every) {
            continue;
        }
        let report = iless_report(state.counts())?;
        if rule.statistic(&report) > beta {
            return Ok(finish(
                instance,
                state.t(),
                report.a_hat,
                RuleFired::Identityless,
                &state,
            ));
        }
    }
    Ok(capped(&state))
}

/// NI-ME: stop at the first `t` with `Z(t) > β(t, δ)`, declare `â_t`.
pub fn run_ni_me(
    instance: &Instance,
    delta: f64,
    rng: RngStream,
    max_epochs: u64,
) -> Result<TrialResult> {
    run_identityless(
        instance,
        Piggyback::NiMe,
        delta,
        rng,
        max_epochs,
        1,
        &mut (),
    )
}

/// NI-ME-1v1: as NI-ME with the pairwise statistic `Z̃(t)`.
pub fn run_ni_me_1v1(
    instance: &Instance,
    delta: f64,
    rng: RngStream,
    max_epochs: u64,
) -> Result<TrialResult> {
    run_identityless(
        instance,
        Piggyback::NiMe1v1,
        delta,
        rng,
        max_epochs,
        1,
        &mut (),
    )
}

/// Parameters of an IB-CME run beyond the instance and random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbCmeParams {
    pub delta: f64,
    pub alpha: u32,
    pub prior: PriorSpec,
    pub max_epochs: u64,
    pub piggyback: Piggyback,
    pub check_every: u64,
}

fn run_ib_cme_observed<O: EpochObserver>(
    instance: &Instance,
    params: &IbCmeParams,
    rng: RngStream,
    observer: &mut O,
) -> Result<TrialResult> {
    check_delta(params.delta)?;
    params.prior.validate()?;
    if params.alpha < 1 {
        return Err(Error::InvalidParameter("alpha must be >= 1".into()));
    }
    // both rules run at confidence δ/2
    let beta = threshold_beta(instance.k(), params.delta / 2.0);
    let mut sampler = IdentitySampler::new(instance, rng);
    let mut state = ObservationState::new(instance.k());
    while state.t() < params.max_epochs {
        let obs = sampler.sample_into(&mut state);
        observer.on_epoch(&obs, &state);
        if !state.t().is_multiple_of(params.check_every) {
            continue;
        }
        let report = iless_report(state.counts())?;
        if params.piggyback.statistic(&report) > beta {
            return Ok(finish(
                instance,
                state.t(),
                report.a_hat,
                RuleFired::Identityless,
                &state,
            ));
        }
        if state.identity_active() {
            let ib = y_stat(state.distinct(), state.t(), params.alpha, &params.prior)?;
            if ib.y.is_some_and(|y| y > beta) {
                return Ok(finish(
                    instance,
                    state.t(),
                    ib.a_tilde,
                    RuleFired::IdentityBased,
                    &state,
                ));
            }
        }
    }
    Ok(capped(&state))
}

/// IB-CME(α, θ): identity-based sampling, stopping on either the piggyback
/// identityless rule or `Y(t) > β(t, δ/2)`.
pub fn run_ib_cme(
    instance: &Instance,
    params: &IbCmeParams,
    rng: RngStream,
) -> Result<TrialResult> {
    run_ib_cme_observed(instance, params, rng, &mut ())
}

/// Runs one trial of `config.algorithm` on stream `(config.seed, trial)`.
pub fn run_trial(instance: &Instance, config: &RunConfig, trial: u64) -> Result<TrialResult> {
    run_trial_observed(instance, config, trial, &mut ())
}

pub fn run_trial_observed<O: EpochObserver>(
    instance: &Instance,
    config: &RunConfig,
    trial: u64,
    observer: &mut O,
) -> Result<TrialResult> {
    config.validate()?;
    let rng = RngStream::new(config.seed, trial);
    match config.algorithm {
        Algorithm::NiMe | Algorithm::NiMe1v1 => {
            let rule = if config.algorithm == Algorithm::NiMe {
                Piggyback::NiMe
            } else {
                Piggyback::NiMe1v1
            };
            run_identityless(
                instance,
                rule,
                config.delta,
                rng,
                config.max_epochs,
                config.check_every,
                observer,
            )
        }
        Algorithm::IbCme | Algorithm::IbCme1v1 => {
            let params = IbCmeParams {
                delta: config.delta,
                alpha: config.alpha,
                prior: config.prior,
                max_epochs: config.max_epochs,
                piggyback: if config.algorithm == Algorithm::IbCme {
                    Piggyback::NiMe
                } else {
                    Piggyback::NiMe1v1
                },
                check_every: config.check_every,
            };
            run_ib_cme_observed(instance, &params, rng, observer)
        }
    }
}

/// Mode declared from a count vector (lowest index on ties).
pub fn empirical_mode(counts: &[u64]) -> usize {
    top_two(counts).0
}
