//! Observation streams for both sampling models.
//!
//! Both samplers draw an individual uniformly (with replacement) from the
//! population, so for a given stream they see the same community sequence;
//! the identity-based sampler additionally consults a seen-set.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, Observation, ObservationState};

/// Reproducible per-trial random stream: a ChaCha8 generator keyed by the
/// master seed with the trial index as its stream id.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Self { rng }
    }

    /// Uniform draw from `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.rng.random_range(0..n)
    }
}

/// Lookup from individual index to community label.
#[derive(Debug, Clone)]
struct Population {
    community_of: Vec<u32>,
}

impl Population {
    fn new(instance: &Instance) -> Self {
        let mut community_of = Vec::with_capacity(instance.population() as usize);
        for (j, &d) in instance.sizes().iter().enumerate() {
            community_of.extend(std::iter::repeat_n(j as u32, d as usize));
        }
        Self { community_of }
    }

    fn len(&self) -> u64 {
        self.community_of.len() as u64
    }
}

/// Each draw reveals only the community: i.i.d. categorical with `p_j = d_j / N`.
#[derive(Debug, Clone)]
pub struct IdentitylessSampler {
    population: Population,
    rng: RngStream,
}

impl IdentitylessSampler {
    pub fn new(instance: &Instance, rng: RngStream) -> Self {
        Self {
            population: Population::new(instance),
            rng,
        }
    }

    pub fn sample(&mut self) -> Observation {
        let who = self.rng.below(self.population.len()) as usize;
        Observation {
            community: self.population.community_of[who] as usize,
            fresh: None,
        }
    }
}

/// Each draw also reveals whether the individual was seen before.
///
/// The seen-set lives here rather than in [`ObservationState`]: the simulator
/// plays nature and knows `N`, the algorithms only ever see `(x_t, σ_t)`.
#[derive(Debug, Clone)]
pub struct IdentitySampler {
    population: Population,
    seen: Vec<u64>,
    rng: RngStream,
}

impl IdentitySampler {
    pub fn new(instance: &Instance, rng: RngStream) -> Self {
        let population = Population::new(instance);
        let words = (population.len() as usize).div_ceil(64);
        Self {
            population,
            seen: vec![0; words],
            rng,
        }
    }

    pub fn sample(&mut self) -> Observation {
        let who = self.rng.below(self.population.len()) as usize;
        let (word, bit) = (who / 64, 1u64 << (who % 64));
        let fresh = self.seen[word] & bit == 0;
        self.seen[word] |= bit;
        Observation {
            community: self.population.community_of[who] as usize,
            fresh: Some(fresh),
        }
    }

    /// Draws once and folds the observation into `state`.
    pub fn sample_into(&mut self, state: &mut ObservationState) -> Observation {
        let obs = self.sample();
        state.record(&obs);
        obs
    }

    pub fn distinct_seen(&self) -> u64 {
        self.seen.iter().map(|w| w.count_ones() as u64).sum()
    }
}

/// Writes a trace as CSV `t,community,fresh` (1-indexed community; `fresh`
/// is `1`/`0`, or empty under identityless sampling).
pub fn write_trace<W: Write>(writer: W, trace: &[Observation]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["t", "community", "fresh"])?;
    for (i, obs) in trace.iter().enumerate() {
        let fresh = match obs.fresh {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        out.write_record([
            (i + 1).to_string().as_str(),
            (obs.community + 1).to_string().as_str(),
            fresh,
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a CSV trace written by [`write_trace`].
pub fn read_trace<R: Read>(reader: R) -> Result<Vec<Observation>> {
    let mut input = csv::Reader::from_reader(reader);
    let mut trace = Vec::new();
    for (i, record) in input.records().enumerate() {
        let record = record?;
        let field = |idx: usize| record.get(idx).map(str::trim).unwrap_or("");
        let t: u64 = field(0)
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad epoch `{}`", i + 1, field(0))))?;
        if t != i as u64 + 1 {
            return Err(Error::Parse(format!(
                "row {}: expected t = {}, got {t}",
                i + 1,
                i + 1
            )));
        }
        let community: usize = field(1)
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad community `{}`", i + 1, field(1))))?;
        if community == 0 {
            return Err(Error::Parse(format!(
                "row {}: communities are 1-indexed",
                i + 1
            )));
        }
        let fresh = match field(2) {
            "" => None,
            "1" | "true" => Some(true),
            "0" | "false" => Some(false),
            other => {
                return Err(Error::Parse(format!(
                    "row {}: bad fresh flag `{other}`",
                    i + 1
                )))
            }
        };
        trace.push(Observation {
            community: community - 1,
            fresh,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn freq(instance: &Instance, draws: usize, seed: u64) -> Vec<f64> {
        let mut sampler = IdentitylessSampler::new(instance, RngStream::new(seed, 0));
        let mut counts = vec![0usize; instance.k()];
        for _ in 0..draws {
            counts[sampler.sample().community] += 1;
        }
        counts.iter().map(|&c| c as f64 / draws as f64).collect()
    }

    #[test]
    fn identityless_symmetric_and_skewed() {
        let f = freq(&Instance::new(vec![2, 1]).unwrap(), 100_000, 3);
        assert!((f[0] - 2.0 / 3.0).abs() < 0.01);
        let f = freq(&Instance::new(vec![3, 1]).unwrap(), 100_000, 4);
        assert!((f[0] - 0.75).abs() < 0.01);
    }

    #[test]
    fn identityless_chi_square_band() {
        // chi-square with 4 dof, 99% quantile = 13.277
        let instance = Instance::new(vec![20, 16, 6, 4, 4]).unwrap();
        let draws = 100_000;
        let f = freq(&instance, draws, 11);
        let chi2: f64 = f
            .iter()
            .zip(instance.proportions())
            .map(|(&obs, p)| {
                let expected = p * draws as f64;
                (obs * draws as f64 - expected).powi(2) / expected
            })
            .sum();
        assert!(chi2 < 13.277, "chi2 = {chi2}");
    }

    #[test]
    fn identity_first_draws_fresh_then_exhausted() {
        let instance = Instance::new(vec![2, 1]).unwrap();
        let mut sampler = IdentitySampler::new(&instance, RngStream::new(5, 0));
        let mut state = ObservationState::new(2);
        let first = sampler.sample_into(&mut state);
        assert_eq!(first.fresh, Some(true));
        for _ in 0..200 {
            sampler.sample_into(&mut state);
        }
        assert_eq!(state.distinct(), &[2, 1]);
        for _ in 0..100 {
            assert_eq!(sampler.sample_into(&mut state).fresh, Some(false));
        }
    }

    #[test]
    fn identity_kernel_frequencies() {
        // d = [2, 1] with S = (1, 0): P(fresh, comm 1) = 1/3, P(fresh, comm 2) = 1/3,
        // P(repeat, comm 1) = 1/3.
        let instance = Instance::new(vec![2, 1]).unwrap();
        let trials = 100_000u64;
        let mut tally = [0u64; 3];
        let mut conditioned = 0u64;
        for trial in 0..trials {
            let mut sampler = IdentitySampler::new(&instance, RngStream::new(77, trial));
            let first = sampler.sample();
            if first.community != 0 {
                continue;
            }
            conditioned += 1;
            let second = sampler.sample();
            match (second.community, second.fresh) {
                (0, Some(true)) => tally[0] += 1,
                (1, Some(true)) => tally[1] += 1,
                (0, Some(false)) => tally[2] += 1,
                other => panic!("impossible draw {other:?}"),
            }
        }
        for count in tally {
            let f = count as f64 / conditioned as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.01, "frequency {f}");
        }
    }

    #[test]
    fn identity_exhausts_population() {
        // C N log N draws with C = 20
        let mut full = 0;
        let trials = 200;
        for trial in 0..trials {
            let instance = Instance::new(vec![40, 30, 20, 10]).unwrap();
            let n = instance.population() as f64;
            let draws = (20.0 * n * n.ln()).ceil() as usize;
            let mut sampler = IdentitySampler::new(&instance, RngStream::new(9, trial));
            let mut state = ObservationState::new(4);
            for _ in 0..draws {
                sampler.sample_into(&mut state);
            }
            if state.distinct() == instance.sizes() {
                full += 1;
            }
        }
        assert!(full as f64 >= 0.99 * trials as f64);
    }

    #[test]
    fn identity_marginal_matches_identityless() {
        let instance = Instance::new(vec![20, 16, 6, 4, 4]).unwrap();
        let mut a = IdentitylessSampler::new(&instance, RngStream::new(21, 3));
        let mut b = IdentitySampler::new(&instance, RngStream::new(21, 3));
        for _ in 0..5_000 {
            assert_eq!(a.sample().community, b.sample().community);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let instance = Instance::new(vec![20, 12, 8, 5, 5]).unwrap();
        let run = |seed, trial| {
            let mut s = IdentitySampler::new(&instance, RngStream::new(seed, trial));
            (0..500).map(|_| s.sample()).collect::<Vec<_>>()
        };
        assert_eq!(run(1, 7), run(1, 7));
        assert_ne!(run(1, 7), run(1, 8));
        assert_ne!(run(1, 7), run(2, 7));
    }

    #[test]
    fn trace_csv_roundtrip() {
        let trace = vec![
            Observation {
                community: 0,
                fresh: Some(true),
            },
            Observation {
                community: 2,
                fresh: Some(true),
            },
            Observation {
                community: 0,
                fresh: Some(false),
            },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "t,community,fresh\n1,1,1\n2,3,1\n3,1,0\n"
        );
        assert_eq!(read_trace(buf.as_slice()).unwrap(), trace);

        let iless = "t,community,fresh\n1,2,\n2,1,\n";
        let parsed = read_trace(iless.as_bytes()).unwrap();
        assert_eq!(
            parsed[0],
            Observation {
                community: 1,
                fresh: None
            }
        );
        assert!(read_trace("t,community,fresh\n1,0,\n".as_bytes()).is_err());
        assert!(read_trace("t,community,fresh\n2,1,\n".as_bytes()).is_err());
    }
}
