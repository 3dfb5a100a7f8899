//! Stochastic hill climbing over a bounded parameter vector, scored by the
//! RMSE between observed and simulated daily series.

use rand::Rng;
use rayon::prelude::*;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("series lengths differ: observed {observed}, simulated {simulated}")]
    LengthMismatch { observed: usize, simulated: usize },
    #[error("empty series")]
    EmptySeries,
    #[error("parameter {name}: value {value} outside [{lower}, {upper}]")]
    OutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("no severity levels configured")]
    NoSeverityLevels,
    #[error("initial evaluation failed: {0}")]
    InitialEvaluation(String),
    #[error("{failed} of {batches} batches failed; calibration aborted")]
    TooManyFailures { failed: usize, batches: usize },
}

/// Root mean square error over days.
pub fn rmse<T: Scalar>(observed: &[T], simulated: &[T]) -> Result<T, CalibrationError> {
    if observed.len() != simulated.len() {
        return Err(CalibrationError::LengthMismatch {
            observed: observed.len(),
            simulated: simulated.len(),
        });
    }
    if observed.is_empty() {
        return Err(CalibrationError::EmptySeries);
    }
    let sum = observed
        .iter()
        .zip(simulated)
        .fold(T::zero(), |acc, (&a, &e)| acc + (a - e) * (a - e));
    Ok((sum / T::of(observed.len() as f64)).sqrt())
}

/// An observed series, a simulated series of the same horizon, and the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord<T> {
    pub observed: Vec<T>,
    pub simulated: Vec<T>,
    pub fitness: T,
}

impl<T: Scalar> CalibrationRecord<T> {
    pub fn new(observed: Vec<T>, simulated: Vec<T>) -> Result<Self, CalibrationError> {
        let fitness = rmse(&observed, &simulated)?;
        Ok(Self {
            observed,
            simulated,
            fitness,
        })
    }

    pub fn horizon(&self) -> usize {
        self.observed.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry<T> {
    pub name: String,
    pub value: T,
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<T> {
    entries: Vec<ParamEntry<T>>,
}

impl<T: Scalar> ParamVector<T> {
    pub fn new(entries: Vec<ParamEntry<T>>) -> Result<Self, CalibrationError> {
        for e in &entries {
            if !(e.lower <= e.value && e.value <= e.upper) {
                return Err(CalibrationError::OutOfBounds {
                    name: e.name.clone(),
                    value: e.value.to_f64_lossy(),
                    lower: e.lower.to_f64_lossy(),
                    upper: e.upper.to_f64_lossy(),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ParamEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.value)
    }

    /// Changes one randomly chosen entry; see [`ParamVector::perturb_at`].
    pub fn perturb<R: Rng + ?Sized>(&self, rng: &mut R, step_fraction: T) -> Self {
        if self.entries.is_empty() {
            return self.clone();
        }
        let i = rng.random_range(0..self.entries.len());
        self.perturb_at(i, rng, step_fraction)
    }

    /// Moves entry `i` by a uniform draw in ±`step_fraction` of its bound
    /// width, clamped to the bounds. Other entries are copied unchanged.
    pub fn perturb_at<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, step_fraction: T) -> Self {
        let mut out = self.clone();
        let e = &mut out.entries[i];
        let u = T::of(rng.random_range(-1.0..=1.0));
        let step = u * step_fraction * (e.upper - e.lower);
        e.value = (e.value + step).max(e.lower).min(e.upper);
        out
    }
}

/// Produces a simulated daily series for a parameter vector, one severity
/// scale, and one replicate index.
pub trait ScenarioRunner<T>: Sync {
    fn run(&self, params: &ParamVector<T>, severity: T, replicate: usize) -> Result<Vec<T>, String>;
}

impl<T, F> ScenarioRunner<T> for F
where
    F: Fn(&ParamVector<T>, T, usize) -> Result<Vec<T>, String> + Sync,
{
    fn run(&self, params: &ParamVector<T>, severity: T, replicate: usize) -> Result<Vec<T>, String> {
        self(params, severity, replicate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig<T> {
    pub batches: usize,
    pub severity_levels: Vec<T>,
    pub seeds_per_eval: usize,
    pub step_fraction: T,
}

impl<T: Scalar> Default for CalibrationConfig<T> {
    fn default() -> Self {
        Self {
            batches: 250,
            severity_levels: [0.5, 1.0, 2.0, 4.0].map(T::of).to_vec(),
            seeds_per_eval: 3,
            step_fraction: T::of(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult<T> {
    pub best: ParamVector<T>,
    pub best_fitness: T,
    /// Best fitness after each batch; entry 0 is the initial vector's.
    pub trace: Vec<T>,
    pub failed_batches: usize,
}

/// Mean RMSE against `observed` over every severity level and replicate.
/// The runs are independent and evaluated in parallel; the mean is taken
/// in a fixed order.
pub fn fitness<T: Scalar>(
    params: &ParamVector<T>,
    observed: &[T],
    runner: &dyn ScenarioRunner<T>,
    config: &CalibrationConfig<T>,
) -> Result<T, String> {
    let jobs: Vec<(T, usize)> = config
        .severity_levels
        .iter()
        .flat_map(|&s| (0..config.seeds_per_eval.max(1)).map(move |r| (s, r)))
        .collect();
    let scores: Vec<T> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let sim = runner.run(params, s, r)?;
            rmse(observed, &sim).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let sum = scores.iter().fold(T::zero(), |a, &b| a + b);
    Ok(sum / T::of(scores.len() as f64))
}

/// Accept-or-revert hill climbing.
///
/// Each batch perturbs one parameter. A strictly better candidate becomes
/// the current vector; anything else is discarded. The next batch always
/// picks a different parameter from the one just tried, when there is more
/// than one. A batch whose evaluation fails is skipped with a warning; once
/// more than half of the budget has failed the run aborts.
pub fn hill_climb<T: Scalar, R: Rng + ?Sized>(
    initial: ParamVector<T>,
    observed: &[T],
    runner: &dyn ScenarioRunner<T>,
    config: &CalibrationConfig<T>,
    rng: &mut R,
) -> Result<CalibrationResult<T>, CalibrationError> {
    if observed.is_empty() {
        return Err(CalibrationError::EmptySeries);
    }
    if config.severity_levels.is_empty() {
        return Err(CalibrationError::NoSeverityLevels);
    }
    let mut best = initial;
    let mut best_fitness =
        fitness(&best, observed, runner, config).map_err(CalibrationError::InitialEvaluation)?;
    let mut trace = Vec::with_capacity(config.batches + 1);
    trace.push(best_fitness);
    let mut failed = 0;
    let mut last: Option<usize> = None;

    for batch in 1..=config.batches {
        if best.is_empty() {
            trace.push(best_fitness);
            continue;
        }
        let n = best.len();
        let i = match last {
            Some(prev) if n > 1 => {
                let k = rng.random_range(0..n - 1);
                if k >= prev {
                    k + 1
                } else {
                    k
                }
            }
            _ => rng.random_range(0..n),
        };
        last = Some(i);
        let candidate = best.perturb_at(i, rng, config.step_fraction);
        match fitness(&candidate, observed, runner, config) {
            Ok(f) if f < best_fitness => {
                log::debug!("batch {batch}: {} improved fitness to {f}", candidate.entries[i].name);
                best = candidate;
                best_fitness = f;
            }
            Ok(_) => {}
            Err(e) => {
                failed += 1;
                log::warn!("batch {batch} skipped: {e}");
                if failed * 2 > config.batches {
                    return Err(CalibrationError::TooManyFailures {
                        failed,
                        batches: config.batches,
                    });
                }
            }
        }
        trace.push(best_fitness);
    }
    Ok(CalibrationResult {
        best,
        best_fitness,
        trace,
        failed_batches: failed,
    })
}
