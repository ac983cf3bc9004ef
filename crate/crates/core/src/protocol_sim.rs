//! Monte Carlo simulation of the homodyne measurement and the
//! repeat-until-success entanglement protocol.
//!
//! Generative model per attempt: each of the `M` atoms is found in `|f>` with
//! probability 1/2. Every `|f>` atom carries an `Exp(1)` decay clock measured
//! in accumulated scattering probability; an atom whose clock fires at
//! `tau < theta` contributes `x_1 * tau / theta` to the mean outcome and is lost,
//! otherwise it contributes the full `x_1`. The outcome is that mean plus
//! vacuum noise of variance 1/2. For two atoms the marginal outcome law is
//! exactly the analytic mixture in [`crate::outcome_distributions`].
//!
//! Random numbers come from ChaCha8 with one stream per block of
//! [`BLOCK_SIZE`] runs, so results depend only on the seed and never on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::SIGMA;
use crate::outcome_distributions::{AcceptanceWindow, PulseConfig};

/// Identifier written into output headers.
pub const RNG_ALGORITHM: &str =
    "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), stream = block index";

/// Runs (or samples) per independent RNG stream.
pub const BLOCK_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub n_atoms: u32,
    pub pulse: PulseConfig,
    pub window: AcceptanceWindow,
    /// Atom numbers counted as the desired entangled state.
    pub accepted_n: Vec<u32>,
    pub max_attempts: u64,
    pub seed: u64,
}

impl ProtocolConfig {
    /// Config with the default accepted set `{1, ..., M - 1}` (so `{1}` for a
    /// pair and `{1, 2}` for three atoms) and a cap of 10 000 attempts.
    pub fn new(
        n_atoms: u32,
        pulse: PulseConfig,
        window: AcceptanceWindow,
        seed: u64,
    ) -> Result<Self> {
        let config = ProtocolConfig {
            n_atoms,
            pulse,
            window,
            accepted_n: (1..n_atoms).collect(),
            max_attempts: 10_000,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_accepted(mut self, accepted_n: Vec<u32>) -> Result<Self> {
        self.accepted_n = accepted_n;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_attempts(mut self, max_attempts: u64) -> Result<Self> {
        self.max_attempts = max_attempts;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms < 2 || self.n_atoms > 64 {
            return Err(Error::InvalidParameter(format!(
                "protocol needs between 2 and 64 atoms, got {}",
                self.n_atoms
            )));
        }
        if let Some(n) = self.accepted_n.iter().find(|&&n| n > self.n_atoms) {
            return Err(Error::InvalidParameter(format!(
                "accepted atom number {n} exceeds M = {}",
                self.n_atoms
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidParameter(
                "max_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn is_target(&self, n: u32) -> bool {
        self.accepted_n.contains(&n)
    }
}

/// One simulated measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptRecord {
    pub true_n: u32,
    /// Per atom: decayed during the pulse.
    pub decay_flags: Vec<bool>,
    /// Per atom: decay clock in units of scattering probability (`None` for
    /// atoms in `|g>`, which do not scatter).
    pub decay_times: Vec<Option<f64>>,
    pub outcome_x: f64,
    pub accepted: bool,
}

impl AttemptRecord {
    pub fn decays(&self) -> usize {
        self.decay_flags.iter().filter(|d| **d).count()
    }
}

/// Compact outcome of one attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeSample {
    pub x: f64,
    pub true_n: u32,
    pub decays: u32,
}

#[inline]
fn contribution(tau: f64, theta: f64, x1: f64) -> f64 {
    if tau < theta {
        x1 * tau / theta
    } else {
        x1
    }
}

/// Draws one attempt. [`sample_attempt`] consumes the generator identically.
#[inline]
fn draw<R: Rng + ?Sized>(n_atoms: u32, pulse: &PulseConfig, rng: &mut R) -> OutcomeSample {
    let (theta, x1) = (pulse.theta(), pulse.x1());
    let mut mean = 0.0;
    let mut true_n = 0;
    let mut decays = 0;
    for _ in 0..n_atoms {
        if rng.random::<bool>() {
            true_n += 1;
            let tau: f64 = rng.sample(Exp1);
            if tau < theta {
                decays += 1;
            }
            mean += contribution(tau, theta, x1);
        }
    }
    let z: f64 = rng.sample(StandardNormal);
    OutcomeSample {
        x: mean + SIGMA * z,
        true_n,
        decays,
    }
}

pub fn sample_attempt<R: Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> AttemptRecord {
    let (theta, x1) = (config.pulse.theta(), config.pulse.x1());
    let m = config.n_atoms as usize;
    let mut decay_flags = Vec::with_capacity(m);
    let mut decay_times = Vec::with_capacity(m);
    let mut mean = 0.0;
    let mut true_n = 0;
    for _ in 0..m {
        if rng.random::<bool>() {
            true_n += 1;
            let tau: f64 = rng.sample(Exp1);
            decay_flags.push(tau < theta);
            decay_times.push(Some(tau));
            mean += contribution(tau, theta, x1);
        } else {
            decay_flags.push(false);
            decay_times.push(None);
        }
    }
    let z: f64 = rng.sample(StandardNormal);
    let outcome_x = mean + SIGMA * z;
    AttemptRecord {
        true_n,
        decay_flags,
        decay_times,
        outcome_x,
        accepted: config.window.contains(outcome_x),
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Splits `n` items into `(block index, items in block)`.
fn blocks(n: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let count = n.div_ceil(BLOCK_SIZE);
    (0..count)
        .into_par_iter()
        .map(move |b| (b, BLOCK_SIZE.min(n - b * BLOCK_SIZE)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    runs: u64,
    completed: u64,
    censored: u64,
    attempts: u64,
    attempts_completed: u64,
    attempts_sq: u128,
    good: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            runs: self.runs + o.runs,
            completed: self.completed + o.completed,
            censored: self.censored + o.censored,
            attempts: self.attempts + o.attempts,
            attempts_completed: self.attempts_completed + o.attempts_completed,
            attempts_sq: self.attempts_sq + o.attempts_sq,
            good: self.good + o.good,
        }
    }
}

/// Aggregate statistics of repeat-until-success runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolStats {
    pub runs: u64,
    /// Runs that ended in an accepted measurement.
    pub completed: u64,
    /// Runs that hit `max_attempts` without acceptance.
    pub censored: u64,
    pub total_attempts: u64,
    /// Mean number of measurements per completed run.
    pub attempts_mean: f64,
    pub attempts_variance: f64,
    /// Accepted measurements per measurement.
    pub acceptance_rate: f64,
    /// Fraction of completed runs that ended with the atom number in the
    /// accepted set and no decay.
    pub conditional_fidelity: f64,
    pub attempts_mean_radius: f64,
    pub acceptance_rate_radius: f64,
    pub conditional_fidelity_radius: f64,
}

impl ProtocolStats {
    fn from_tally(t: Tally) -> Self {
        let n = t.completed as f64;
        let (mean, var) = if t.completed > 0 {
            let mean = t.attempts_completed as f64 / n;
            let var = if t.completed > 1 {
                (t.attempts_sq as f64 - n * mean * mean) / (n - 1.0)
            } else {
                0.0
            };
            (mean, var.max(0.0))
        } else {
            (f64::NAN, f64::NAN)
        };
        let rate = if t.attempts > 0 {
            t.completed as f64 / t.attempts as f64
        } else {
            f64::NAN
        };
        let fidelity = if t.completed > 0 {
            t.good as f64 / n
        } else {
            f64::NAN
        };
        ProtocolStats {
            runs: t.runs,
            completed: t.completed,
            censored: t.censored,
            total_attempts: t.attempts,
            attempts_mean: mean,
            attempts_variance: var,
            acceptance_rate: rate,
            conditional_fidelity: fidelity,
            attempts_mean_radius: 3.0 * (var / n).sqrt(),
            acceptance_rate_radius: 3.0 * (rate * (1.0 - rate) / t.attempts as f64).sqrt(),
            conditional_fidelity_radius: 3.0 * (fidelity * (1.0 - fidelity) / n).sqrt(),
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.runs as f64
    }
}

/// Runs the repeat-until-success protocol `n_runs` times. After every
/// rejected measurement the atoms are re-prepared in the product state and a
/// fresh atom number is drawn.
pub fn run_protocol(config: &ProtocolConfig, n_runs: u64) -> Result<ProtocolStats> {
    config.validate()?;
    if n_runs == 0 {
        return Err(Error::InvalidParameter("n_runs must be at least 1".into()));
    }
    let tally = blocks(n_runs)
        .map(|(block, len)| {
            let mut rng = block_rng(config.seed, block);
            let mut t = Tally {
                runs: len,
                ..Tally::default()
            };
            for _ in 0..len {
                let mut attempts = 0u64;
                loop {
                    attempts += 1;
                    let s = draw(config.n_atoms, &config.pulse, &mut rng);
                    if config.window.contains(s.x) {
                        t.completed += 1;
                        t.attempts_completed += attempts;
                        t.attempts_sq += u128::from(attempts) * u128::from(attempts);
                        if s.decays == 0 && config.is_target(s.true_n) {
                            t.good += 1;
                        }
                        break;
                    }
                    if attempts >= config.max_attempts {
                        t.censored += 1;
                        break;
                    }
                }
                t.attempts += attempts;
            }
            t
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tally::default(), Tally::merge);
    Ok(ProtocolStats::from_tally(tally))
}

/// `n_samples` independent single-measurement outcomes (no repetition).
pub fn sample_outcomes(config: &ProtocolConfig, n_samples: u64) -> Vec<OutcomeSample> {
    let chunks: Vec<Vec<OutcomeSample>> = blocks(n_samples)
        .map(|(block, len)| {
            let mut rng = block_rng(config.seed, block);
            (0..len)
                .map(|_| draw(config.n_atoms, &config.pulse, &mut rng))
                .collect()
        })
        .collect();
    chunks.concat()
}

/// Binned outcome density with Poisson errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples entering the normalization (those matching the condition).
    pub normalization: u64,
    pub density: Vec<f64>,
    pub errors: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Histogram of `n_samples` single-measurement outcomes over `edges`,
/// optionally restricted to attempts with a given true atom number (the
/// density is then normalized to that subpopulation).
pub fn histogram(
    config: &ProtocolConfig,
    n_samples: u64,
    edges: &[f64],
    condition: Option<u32>,
) -> Result<Histogram> {
    config.validate()?;
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "histogram edges must be strictly increasing with at least two entries".into(),
        ));
    }
    let bins = edges.len() - 1;
    let (counts, normalization) = blocks(n_samples)
        .map(|(block, len)| {
            let mut rng = block_rng(config.seed, block);
            let mut counts = vec![0u64; bins];
            let mut norm = 0u64;
            for _ in 0..len {
                let s = draw(config.n_atoms, &config.pulse, &mut rng);
                if condition.is_some_and(|n| n != s.true_n) {
                    continue;
                }
                norm += 1;
                if s.x >= edges[0] && s.x < edges[bins] {
                    let i = edges.partition_point(|e| *e <= s.x) - 1;
                    counts[i] += 1;
                }
            }
            (counts, norm)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((vec![0u64; bins], 0u64), |(mut acc, n), (c, m)| {
            acc.iter_mut().zip(c).for_each(|(a, b)| *a += b);
            (acc, n + m)
        });
    let norm = normalization.max(1) as f64;
    let (density, errors) = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| {
            let scale = norm * (w[1] - w[0]);
            (c as f64 / scale, (c as f64).sqrt() / scale)
        })
        .unzip();
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        normalization,
        density,
        errors,
    })
}
