//! Domain types: problem instances, running observation state, the prior on
//! community sizes and per-run configuration.
//!
//! Communities are 0-indexed here and 1-indexed in everything a user sees
//! (CLI output, trace files, JSON records).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partitioned population: `sizes[j]` individuals in community `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct Instance {
    sizes: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

#[derive(Deserialize)]
struct RawInstance {
    sizes: Vec<u64>,
    #[serde(default)]
    name: Option<String>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        let mut instance = Instance::new(raw.sizes)?;
        instance.name = raw.name;
        Ok(instance)
    }
}

impl Instance {
    /// Validates `K >= 2`, all sizes positive and a strict unique maximum.
    pub fn new(sizes: Vec<u64>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::TooFewCommunities(sizes.len()));
        }
        if let Some(j) = sizes.iter().position(|&d| d == 0) {
            return Err(Error::EmptyCommunity(j + 1));
        }
        let max = *sizes.iter().max().expect("non-empty");
        if sizes.iter().filter(|&&d| d == max).count() > 1 {
            return Err(Error::TiedMode(max));
        }
        Ok(Self { sizes, name: None })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Total population `N`.
    pub fn population(&self) -> u64 {
        self.sizes.iter().sum()
    }

    /// Sampling probabilities `p_j = d_j / N`.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.population() as f64;
        self.sizes.iter().map(|&d| d as f64 / n).collect()
    }

    /// Index of the (unique) largest community.
    pub fn mode(&self) -> usize {
        crate::numeric::top_two(&self.sizes).0
    }

    /// The two largest sizes `(d_1, d_2)` in decreasing order.
    pub fn top_two_sizes(&self) -> (u64, u64) {
        let (a, b) = crate::numeric::top_two(&self.sizes);
        (self.sizes[a], self.sizes[b])
    }

    /// Every community multiplied by `omega`; proportions are unchanged.
    pub fn scaled(&self, omega: u64) -> Result<Self> {
        if omega == 0 {
            return Err(Error::InvalidParameter("scale factor must be >= 1".into()));
        }
        let mut scaled = Instance::new(self.sizes.iter().map(|d| d * omega).collect())?;
        scaled.name = self.name.as_ref().map(|n| format!("{n}x{omega}"));
        Ok(scaled)
    }
}

/// Running counts after `t` epochs: `counts[i] = N_i(t)` and
/// `distinct[j] = S_j(t)` (distinct individuals, identity-based sampling only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationState {
    t: u64,
    counts: Vec<u64>,
    distinct: Vec<u64>,
}

impl ObservationState {
    pub fn new(k: usize) -> Self {
        Self {
            t: 0,
            counts: vec![0; k],
            distinct: vec![0; k],
        }
    }

    /// Identityless state from raw counts; `t = Σ counts`.
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let k = counts.len();
        Self {
            t: counts.iter().sum(),
            counts,
            distinct: vec![0; k],
        }
    }

    /// Checked constructor for arbitrary states.
    pub fn from_parts(counts: Vec<u64>, distinct: Vec<u64>) -> Result<Self> {
        if counts.len() != distinct.len() {
            return Err(Error::InconsistentState(format!(
                "{} counts but {} distinct counts",
                counts.len(),
                distinct.len()
            )));
        }
        if let Some(j) = (0..counts.len()).find(|&j| distinct[j] > counts[j]) {
            return Err(Error::InconsistentState(format!(
                "community {} has S = {} > N = {}",
                j + 1,
                distinct[j],
                counts[j]
            )));
        }
        Ok(Self {
            t: counts.iter().sum(),
            counts,
            distinct,
        })
    }

    pub fn record(&mut self, obs: &Observation) {
        self.t += 1;
        self.counts[obs.community] += 1;
        if obs.fresh == Some(true) {
            self.distinct[obs.community] += 1;
        }
        debug_assert_eq!(self.counts.iter().sum::<u64>(), self.t);
        debug_assert!(self.distinct[obs.community] <= self.counts[obs.community]);
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn distinct(&self) -> &[u64] {
        &self.distinct
    }

    /// Empirical frequencies `N_i(t) / t`.
    pub fn frequencies(&self) -> Vec<f64> {
        let t = self.t.max(1) as f64;
        self.counts.iter().map(|&n| n as f64 / t).collect()
    }

    /// `K^(t)`: number of communities with at least one distinct individual.
    pub fn observed_communities(&self) -> u64 {
        observed_communities(&self.distinct)
    }

    /// Whether `t > Σ S_j(t) + K^(t)`, the identity-based activation condition.
    pub fn identity_active(&self) -> bool {
        self.t > activation_boundary(&self.distinct)
    }
}

pub(crate) fn observed_communities(distinct: &[u64]) -> u64 {
    distinct.iter().filter(|&&s| s > 0).count() as u64
}

/// `Σ S_j + K^(t)`; the identity-based statistic exists only for `t` above it.
pub fn activation_boundary(distinct: &[u64]) -> u64 {
    distinct.iter().sum::<u64>() + observed_communities(distinct)
}

/// One draw: the community label and, under identity-based sampling,
/// whether the individual is new.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub community: usize,
    pub fresh: Option<bool>,
}

/// Prior pmf `θ` on community sizes; the product prior is `Π_j θ(d'_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// `θ(i) = q (1 - q)^i` on `{0, 1, 2, ...}`.
    Geometric { q: f64 },
}

impl PriorSpec {
    pub fn geometric(q: f64) -> Result<Self> {
        let spec = PriorSpec::Geometric { q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorSpec::Geometric { q } if q > 0.0 && q < 1.0 => Ok(()),
            PriorSpec::Geometric { q } => Err(Error::InvalidParameter(format!(
                "geometric prior needs 0 < q < 1, got {q}"
            ))),
        }
    }

    pub fn pmf(&self, i: u64) -> f64 {
        self.ln_pmf(i).exp()
    }

    pub fn ln_pmf(&self, i: u64) -> f64 {
        match *self {
            PriorSpec::Geometric { q } => q.ln() + i as f64 * (-q).ln_1p(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            PriorSpec::Geometric { q } => format!("geometric(q={q})"),
        }
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Geometric { q: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ni-me")]
    NiMe,
    #[serde(rename = "ni-me-1v1")]
    NiMe1v1,
    /// Identity-based rule piggybacking on NI-ME.
    #[serde(rename = "ib-cme")]
    IbCme,
    /// Identity-based rule piggybacking on NI-ME-1v1.
    #[serde(rename = "ib-cme-1v1")]
    IbCme1v1,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::NiMe,
        Algorithm::NiMe1v1,
        Algorithm::IbCme,
        Algorithm::IbCme1v1,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::NiMe => "ni-me",
            Algorithm::NiMe1v1 => "ni-me-1v1",
            Algorithm::IbCme => "ib-cme",
            Algorithm::IbCme1v1 => "ib-cme-1v1",
        }
    }

    pub fn identity_based(&self) -> bool {
        matches!(self, Algorithm::IbCme | Algorithm::IbCme1v1)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm `{s}`")))
    }
}

pub const DEFAULT_MAX_EPOCHS: u64 = 10_000_000;

fn default_alpha() -> u32 {
    1
}

fn default_max_epochs() -> u64 {
    DEFAULT_MAX_EPOCHS
}

fn default_check_every() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub delta: f64,
    pub algorithm: Algorithm,
    #[serde(default = "default_alpha")]
    pub alpha: u32,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: u64,
    /// Evaluate the stopping rules only every `check_every` epochs.
    #[serde(default = "default_check_every")]
    pub check_every: u64,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, delta: f64) -> Self {
        Self {
            delta,
            algorithm,
            alpha: 1,
            prior: PriorSpec::default(),
            seed: 0,
            max_epochs: DEFAULT_MAX_EPOCHS,
            check_every: 1,
        }
    }

    pub fn with_alpha(mut self, alpha: u32) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_prior(mut self, prior: PriorSpec) -> Self {
        self.prior = prior;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_epochs(mut self, max_epochs: u64) -> Self {
        self.max_epochs = max_epochs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.alpha < 1 {
            return Err(Error::InvalidParameter("alpha must be >= 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(Error::InvalidParameter("max_epochs must be >= 1".into()));
        }
        if self.check_every < 1 {
            return Err(Error::InvalidParameter("check_every must be >= 1".into()));
        }
        self.prior.validate()
    }
}
