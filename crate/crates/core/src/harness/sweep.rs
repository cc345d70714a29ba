use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Estimator, ExperimentConfig};
use super::metrics::{mean_and_std_error, nmse};
use crate::anm::{estimate_channel, AnmConfig, AnmSolution};
use crate::atomic::ArrayDims;
use crate::channel::{random_realization, FrequencyChannel};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::omp::{estimate_channel_omp, AngularDictionary};
use crate::ram::{estimate_channel_ram, RamConfig};
use crate::sounding::{gen_frames, receive, MeasurementSet, PhaseCodebook};

/// Environment variable holding the worker-thread count for sweeps.
pub const WORKERS_ENV: &str = "MMWAVE_ANM_WORKERS";

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one Monte-Carlo scenario. The estimator is deliberately not an
/// input so every estimator sees the same channel, frames and noise.
pub fn scenario_seed(base_seed: u64, snr_db: f64, frames: usize, trial: usize) -> u64 {
    let snr_bits = (snr_db + 0.0).to_bits();
    [snr_bits, frames as u64, trial as u64]
        .into_iter()
        .fold(splitmix64(base_seed), |acc, part| splitmix64(acc ^ splitmix64(part)))
}

fn stream_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0xA5A5)))
}

/// Ground truth and measurements for one trial.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub truth: FrequencyChannel,
    pub measurements: MeasurementSet,
}

pub fn make_scenario(config: &ExperimentConfig, snr_db: f64, frames: usize, seed: u64) -> Result<Scenario> {
    let realization = random_realization(&config.channel_params()?, stream_seed(seed, 0))?;
    let truth = realization.frequency_channel();
    let codebook = PhaseCodebook::new(config.codebook_bits)?;
    let training = gen_frames(
        frames,
        config.sounding_dims(),
        &codebook,
        config.power,
        stream_seed(seed, 1),
    )?;
    let measurements = receive(&truth, &training, snr_db, config.power, stream_seed(seed, 2))?;
    Ok(Scenario {
        seed,
        truth,
        measurements,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub estimator: Estimator,
    pub snr_db: f64,
    pub frames: usize,
    pub trial: usize,
    pub seed: u64,
    pub nmse_db: f64,
    /// ADMM steps (ANM, RAM) or selected atoms (OMP), summed over subcarriers.
    pub iterations: usize,
    pub runtime_ms: f64,
    /// Estimator error; the row then scores the all-zero estimate.
    pub failure: Option<String>,
    /// Subcarrier solves that hit the iteration cap or diverged.
    pub nonconverged: usize,
    /// Smallest `λ_min(Ξ) − bound` over subcarriers (ANM and RAM only).
    pub feasibility_margin: Option<f64>,
}

/// Per-estimator state reused across trials.
pub struct Runner<'a> {
    config: &'a ExperimentConfig,
    anm: AnmConfig,
    ram: RamConfig,
    dictionary: Option<AngularDictionary>,
}

impl<'a> Runner<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let dims = ArrayDims::new(config.n_tx, config.n_rx)?;
        let dictionary = if config.estimators.contains(&Estimator::Omp) {
            Some(AngularDictionary::new(config.grid, dims)?)
        } else {
            None
        };
        Ok(Self {
            config,
            anm: config.anm_config(),
            ram: config.ram_config(),
            dictionary,
        })
    }

    pub fn run(&self, estimator: Estimator, snr_db: f64, frames: usize, trial: usize) -> Result<TrialResult> {
        let seed = scenario_seed(self.config.base_seed, snr_db, frames, trial);
        let scenario = make_scenario(self.config, snr_db, frames, seed)?;
        self.run_on(&scenario, estimator, snr_db, frames, trial)
    }

    pub fn run_on(
        &self,
        scenario: &Scenario,
        estimator: Estimator,
        snr_db: f64,
        frames: usize,
        trial: usize,
    ) -> Result<TrialResult> {
        let k_count = scenario.truth.per_subcarrier.len();
        let mut estimates = Vec::with_capacity(k_count);
        let mut iterations = 0;
        let mut nonconverged = 0;
        let mut margin: Option<f64> = None;
        let mut failure = None;
        let mut record_atoms = 0;
        let ms = &scenario.measurements;
        let start = Instant::now();
        let mut record = |sol: &AnmSolution, flagged: bool| -> Result<()> {
            iterations += sol.iterations;
            if !sol.converged || flagged {
                nonconverged += 1;
            }
            let (min, bound) = sol.feasibility()?;
            let m = min - bound;
            margin = Some(margin.map_or(m, |old: f64| old.min(m)));
            Ok(())
        };
        for k in 0..k_count {
            let step: Result<CMat> = match estimator {
                Estimator::Anm => estimate_channel(ms, k, &self.anm).and_then(|(h, sol)| {
                    record(&sol, false)?;
                    Ok(h)
                }),
                Estimator::Ram => estimate_channel_ram(ms, k, &self.ram).and_then(|(h, sol)| {
                    record(&sol.solution, sol.diverged)?;
                    Ok(h)
                }),
                Estimator::Omp => {
                    let dict = match &self.dictionary {
                        Some(d) => d,
                        None => return Err(Error::InvalidConfig("OMP not enabled in this runner".into())),
                    };
                    estimate_channel_omp(
                        ms,
                        k,
                        dict,
                        self.config.omp_max_atoms(),
                        self.config.omp_residual_tol,
                    )
                    .map(|(h, res)| {
                        record_atoms += res.support.len();
                        h
                    })
                }
            };
            match step {
                Ok(h) => estimates.push(h),
                Err(e) => {
                    failure = Some(format!("subcarrier {k}: {e}"));
                    break;
                }
            }
        }
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        iterations += record_atoms;
        if failure.is_some() {
            estimates = scenario
                .truth
                .per_subcarrier
                .iter()
                .map(|h| CMat::zeros(h.nrows(), h.ncols()))
                .collect();
        }
        Ok(TrialResult {
            estimator,
            snr_db,
            frames,
            trial,
            seed: scenario.seed,
            nmse_db: nmse(&estimates, &scenario.truth)?,
            iterations,
            runtime_ms: if self.config.record_runtime { elapsed } else { 0.0 },
            failure,
            nonconverged,
            feasibility_margin: margin,
        })
    }
}

/// One trial with a freshly built runner.
pub fn run_trial(
    config: &ExperimentConfig,
    snr_db: f64,
    frames: usize,
    estimator: Estimator,
    trial: usize,
) -> Result<TrialResult> {
    let mut single = config.clone();
    single.estimators = vec![estimator];
    let runner = Runner::new(&single)?;
    runner.run(estimator, snr_db, frames, trial)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Snr,
    Frames,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub estimator: Estimator,
    pub snr_db: f64,
    pub frames: usize,
    pub trials: usize,
    pub mean_nmse_db: f64,
    pub std_error_db: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub config: ExperimentConfig,
    pub rows: Vec<TrialResult>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepResult {
    pub fn aggregate(&self, estimator: Estimator, snr_db: f64, frames: usize) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.estimator == estimator && a.snr_db == snr_db && a.frames == frames)
    }
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{WORKERS_ENV} must be a count, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn run_grid(config: &ExperimentConfig, kind: SweepKind, points: &[(f64, usize)]) -> Result<SweepResult> {
    let runner = Runner::new(config)?;
    let mut estimators = config.estimators.clone();
    estimators.sort();
    estimators.dedup();
    let jobs: Vec<(f64, usize, usize)> = points
        .iter()
        .flat_map(|&(snr, m)| (0..config.trials).map(move |t| (snr, m, t)))
        .collect();
    let pool = worker_pool()?;
    let mut rows: Vec<TrialResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(snr, m, t)| {
                let seed = scenario_seed(config.base_seed, snr, m, t);
                let scenario = make_scenario(config, snr, m, seed)?;
                estimators
                    .iter()
                    .map(|&e| runner.run_on(&scenario, e, snr, m, t))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();
    rows.sort_by(|a, b| {
        a.estimator
            .cmp(&b.estimator)
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.frames.cmp(&b.frames))
            .then(a.trial.cmp(&b.trial))
    });
    let aggregates = aggregate_rows(&rows);
    Ok(SweepResult {
        kind,
        config: config.clone(),
        rows,
        aggregates,
    })
}

/// Mean and standard error of `nmse_db` per (estimator, SNR, frames), in row order.
pub fn aggregate_rows(rows: &[TrialResult]) -> Vec<Aggregate> {
    let mut out: Vec<Aggregate> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let key = (rows[start].estimator, rows[start].snr_db, rows[start].frames);
        let end = rows[start..]
            .iter()
            .position(|r| (r.estimator, r.snr_db, r.frames) != key)
            .map_or(rows.len(), |p| start + p);
        let group = &rows[start..end];
        let values: Vec<f64> = group.iter().map(|r| r.nmse_db).collect();
        let (mean, se) = mean_and_std_error(&values);
        out.push(Aggregate {
            estimator: key.0,
            snr_db: key.1,
            frames: key.2,
            trials: group.len(),
            mean_nmse_db: mean,
            std_error_db: se,
            failures: group.iter().filter(|r| r.failure.is_some()).count(),
        });
        start = end;
    }
    out
}

/// Every estimator × SNR point × trial at `config.frames`.
pub fn sweep_snr(config: &ExperimentConfig) -> Result<SweepResult> {
    let points: Vec<(f64, usize)> = config.snr_list.iter().map(|&s| (s, config.frames)).collect();
    run_grid(config, SweepKind::Snr, &points)
}

/// Every estimator × frame count × trial at `config.frames_snr_db`.
pub fn sweep_frames(config: &ExperimentConfig) -> Result<SweepResult> {
    if config.frames_list.is_empty() {
        return Err(Error::InvalidConfig("frames_list is empty".into()));
    }
    let points: Vec<(f64, usize)> = config
        .frames_list
        .iter()
        .map(|&m| (config.frames_snr_db, m))
        .collect();
    run_grid(config, SweepKind::Frames, &points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            n_tx: 3,
            n_rx: 3,
            n_rf: 1,
            n_subcarriers: 2,
            n_paths: 1,
            frames: 6,
            frames_list: vec![4, 9],
            snr_list: vec![0.0, 10.0, 20.0],
            trials: 5,
            grid: 8,
            estimators: vec![Estimator::Omp, Estimator::Anm],
            max_iters: 300,
            ram_iterations: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn seeds_are_distinct_over_the_desk_grid() {
        let config = ExperimentConfig::default();
        let mut seen = HashSet::new();
        let snrs = (-20..=40).map(|s| s as f64).chain([f64::INFINITY]);
        for snr in snrs {
            for m in 1..=128 {
                for t in 0..100 {
                    assert!(seen.insert(scenario_seed(config.base_seed, snr, m, t)));
                }
            }
        }
        assert_ne!(scenario_seed(1, 0.0, 1, 0), scenario_seed(2, 0.0, 1, 0));
        assert_eq!(scenario_seed(1, -0.0, 1, 0), scenario_seed(1, 0.0, 1, 0));
    }

    #[test]
    fn trial_is_deterministic() {
        let config = tiny();
        for e in [Estimator::Anm, Estimator::Omp] {
            let a = run_trial(&config, 10.0, 6, e, 3).unwrap();
            let b = run_trial(&config, 10.0, 6, e, 3).unwrap();
            assert_eq!(a.nmse_db.to_bits(), b.nmse_db.to_bits());
            assert_eq!((a.seed, a.iterations), (b.seed, b.iterations));
            assert!(a.runtime_ms > 0.0);
            assert!(a.iterations >= 1);
            assert!(a.failure.is_none());
        }
    }

    #[test]
    fn noiseless_full_sounding_sanity() {
        let config = ExperimentConfig {
            n_rf: 3,
            frames: 3,
            zeta_override: Some(1e-6),
            max_iters: 20_000,
            ..tiny()
        };
        let row = run_trial(&config, f64::INFINITY, 3, Estimator::Anm, 0).unwrap();
        assert!(row.nmse_db <= -60.0, "{}", row.nmse_db);
        assert!(row.feasibility_margin.unwrap() >= 0.0);
    }

    #[test]
    fn failures_are_recorded_not_raised() {
        // a zero noise level with no override leaves RAM without a shift
        let config = ExperimentConfig {
            estimators: vec![Estimator::Ram],
            ..tiny()
        };
        let row = run_trial(&config, f64::INFINITY, 6, Estimator::Ram, 0).unwrap();
        assert!(row.failure.is_some());
        assert_eq!(row.nmse_db, 0.0);
    }

    #[test]
    fn snr_sweep_row_count_and_order() {
        let config = tiny();
        let res = sweep_snr(&config).unwrap();
        assert_eq!(res.rows.len(), 2 * 3 * 5);
        assert_eq!(res.aggregates.len(), 6);
        assert_eq!(res.rows[0].estimator, Estimator::Anm);
        assert!(res.aggregates.iter().all(|a| a.trials == 5));
        let anm_0 = res.aggregate(Estimator::Anm, 0.0, 6).unwrap().mean_nmse_db;
        let anm_20 = res.aggregate(Estimator::Anm, 20.0, 6).unwrap().mean_nmse_db;
        assert!(anm_20 < anm_0);
    }

    #[test]
    fn frames_sweep_single_point() {
        let config = ExperimentConfig {
            frames_list: vec![5],
            trials: 2,
            estimators: vec![Estimator::Omp],
            ..tiny()
        };
        let res = sweep_frames(&config).unwrap();
        assert_eq!(res.rows.len(), 2);
        assert_eq!(res.aggregates.len(), 1);
        assert_eq!(res.aggregates[0].snr_db, 10.0);
        assert_eq!(res.aggregates[0].frames, 5);
    }

    #[test]
    fn estimators_share_scenarios() {
        let config = tiny();
        let res = sweep_snr(&config).unwrap();
        let seeds = |e: Estimator| -> Vec<u64> { res.rows.iter().filter(|r| r.estimator == e).map(|r| r.seed).collect() };
        assert_eq!(seeds(Estimator::Anm), seeds(Estimator::Omp));
    }
}
