//! Monte Carlo sweeps comparing ESPRIT with MUSIC.
//!
//! Each trial `(nsr index i, trial t)` draws its own seed
//! `derive_seed(master, i, t)`, from which the random model and the noise
//! are derived. Every method sees the same noisy samples. Records are sorted
//! by `(method, nsr index, trial)` before aggregation, so output does not
//! depend on the execution mode.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esprit::{ss_esprit, EspritOptions, EstimationResult};
use crate::music::{music_estimate, MusicOptions, DEFAULT_GRID_DENSITY};
use crate::parallel::{map_indexed, Execution};
use crate::plot::{Plot, Style};
use crate::rng::{derive_seed, splitmix64};
use crate::signal_model::{
    add_noise, hausdorff_distance, nu_for_target_nsr, random_model, synthesize, AmplitudeLaw, NoiseSpec, Placement,
    RandomModelSpec, SampleVector, SpectralModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Esprit,
    Music,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Esprit => "esprit",
            Method::Music => "music",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esprit" => Ok(Method::Esprit),
            "music" => Ok(Method::Music),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

/// `0, 0.05, …, 0.6`.
pub fn default_nsr_grid() -> Vec<f64> {
    (0..=12).map(|i| i as f64 * 0.05).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "M")]
    pub degree: usize,
    #[serde(rename = "s")]
    pub sparsity: usize,
    pub separation_band_rl: (f64, f64),
    pub placement: Placement,
    pub amplitude_law: AmplitudeLaw,
    pub nsr_grid: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub success_threshold_rl: f64,
    pub seed: u64,
    #[serde(rename = "L_override")]
    pub split_override: Option<usize>,
    pub music_grid_density: usize,
    /// Wall-clock timing per estimate. Off by default so that CSV output is
    /// reproducible byte for byte.
    pub record_runtime: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            degree: 100,
            sparsity: 20,
            separation_band_rl: (2.0, 3.0),
            placement: Placement::default(),
            amplitude_law: AmplitudeLaw::UnitRandomPhase,
            nsr_grid: default_nsr_grid(),
            trials: 100,
            methods: vec![Method::Esprit, Method::Music],
            success_threshold_rl: 1.0,
            seed: 1,
            split_override: None,
            music_grid_density: DEFAULT_GRID_DENSITY,
            record_runtime: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.nsr_grid.is_empty() {
            return bad("nsr_grid must not be empty".into());
        }
        if let Some(x) = self.nsr_grid.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return bad(format!("NSR values must be finite and nonnegative, got {x}"));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        let (low, high) = self.separation_band_rl;
        if !(low <= high) {
            return bad(format!("separation band [{low}, {high}] has low > high"));
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.sparsity == 0 || self.degree + 1 < 2 * self.sparsity {
            return bad(format!(
                "need 1 <= s and M + 1 >= 2s, got s = {}, M = {}",
                self.sparsity, self.degree
            ));
        }
        if !(self.success_threshold_rl >= 0.0) {
            return bad("success threshold must be nonnegative".into());
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn model_spec(&self, seed: u64) -> RandomModelSpec {
        RandomModelSpec {
            placement: self.placement,
            ..RandomModelSpec::new(
                self.sparsity,
                self.separation_band_rl,
                self.degree,
                self.amplitude_law,
                seed,
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub nsr_index: usize,
    pub nsr: f64,
    pub trial: usize,
    pub seed: u64,
    /// `+∞` when estimation failed.
    pub hausdorff_rl: f64,
    pub success: bool,
    pub runtime_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub nsr: f64,
    pub success_rate: f64,
    /// Mean over trials that produced an estimate; NaN if none did.
    pub mean_hausdorff_rl: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// Noisy samples for one trial, plus the model they come from.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub model: SpectralModel,
    pub samples: SampleVector,
    pub nu: f64,
}

/// Independent sub-seeds for the model draw and the noise draw.
fn sub_seeds(trial_seed: u64) -> (u64, u64) {
    (
        splitmix64(trial_seed ^ 0x6d6f_6465_6c00_0000),
        splitmix64(trial_seed ^ 0x6e6f_6973_6500_0000),
    )
}

pub fn trial_instance(
    spec_for_seed: impl Fn(u64) -> RandomModelSpec,
    degree: usize,
    nsr_target: f64,
    trial_seed: u64,
) -> Result<TrialInstance> {
    let (model_seed, noise_seed) = sub_seeds(trial_seed);
    let model = random_model(&spec_for_seed(model_seed))?;
    let clean = synthesize(&model, degree)?;
    let nu = nu_for_target_nsr(&clean, nsr_target)?;
    let samples = add_noise(&clean, &NoiseSpec::new(nu, noise_seed)?);
    Ok(TrialInstance { model, samples, nu })
}

/// Runs one method on `y` with the sparsity known.
pub fn estimate_with(
    method: Method,
    y: &SampleVector,
    sparsity: usize,
    split: Option<usize>,
    grid_density: usize,
) -> Result<EstimationResult> {
    match method {
        Method::Esprit => ss_esprit(
            y,
            &EspritOptions {
                split,
                ..EspritOptions::with_sparsity(sparsity)
            },
        ),
        Method::Music => music_estimate(
            y,
            sparsity,
            &MusicOptions {
                split,
                grid_density,
                execution: Execution::Sequential,
            },
        ),
    }
}

fn run_trial(config: &ExperimentConfig, nsr_index: usize, trial: usize) -> Vec<TrialRecord> {
    let seed = derive_seed(config.seed, nsr_index as u64, trial as u64);
    let nsr = config.nsr_grid[nsr_index];
    // the instance error is reported once per method
    let instance = trial_instance(|s| config.model_spec(s), config.degree, nsr, seed).map_err(|e| e.to_string());
    config
        .methods
        .iter()
        .map(|&method| {
            let failure = |e: String, runtime_ms| TrialRecord {
                method,
                nsr_index,
                nsr,
                trial,
                seed,
                hausdorff_rl: f64::INFINITY,
                success: false,
                runtime_ms,
                error: Some(e),
            };
            let inst = match &instance {
                Ok(inst) => inst,
                Err(e) => return failure(e.clone(), None),
            };
            let start = Instant::now();
            let est = estimate_with(
                method,
                &inst.samples,
                config.sparsity,
                config.split_override,
                config.music_grid_density,
            );
            let runtime_ms = config.record_runtime.then(|| start.elapsed().as_secs_f64() * 1e3);
            match est.and_then(|e| hausdorff_distance(&e.frequencies, inst.model.frequencies())) {
                Ok(d) => {
                    let h = d * config.degree as f64;
                    TrialRecord {
                        method,
                        nsr_index,
                        nsr,
                        trial,
                        seed,
                        hausdorff_rl: h,
                        success: h <= config.success_threshold_rl,
                        runtime_ms,
                        error: None,
                    }
                }
                Err(e) => failure(e.to_string(), runtime_ms),
            }
        })
        .collect()
}

/// Aggregates the records of one `(method, nsr)` cell.
pub fn aggregate(method: Method, nsr: f64, records: &[&TrialRecord]) -> Aggregate {
    let n = records.len();
    let successes = records.iter().filter(|r| r.success).count();
    let finite: Vec<f64> = records
        .iter()
        .map(|r| r.hausdorff_rl)
        .filter(|h| h.is_finite())
        .collect();
    let mean = if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Aggregate {
        method,
        nsr,
        success_rate: successes as f64 / n as f64,
        mean_hausdorff_rl: mean,
        failures: n - finite.len(),
    }
}

pub fn run_sweep(config: &ExperimentConfig, exec: Execution) -> Result<SweepResult> {
    config.validate()?;
    let per_nsr = config.trials;
    let jobs = config.nsr_grid.len() * per_nsr;
    let mut trials: Vec<TrialRecord> = map_indexed(jobs, exec, |j| run_trial(config, j / per_nsr, j % per_nsr))
        .into_iter()
        .flatten()
        .collect();
    trials.sort_by(|a, b| (a.method, a.nsr_index, a.trial).cmp(&(b.method, b.nsr_index, b.trial)));

    let mut methods = config.methods.clone();
    methods.sort();
    methods.dedup();
    let mut aggregates = Vec::new();
    for &method in &methods {
        for (i, &nsr) in config.nsr_grid.iter().enumerate() {
            let cell: Vec<&TrialRecord> = trials
                .iter()
                .filter(|r| r.method == method && r.nsr_index == i)
                .collect();
            aggregates.push(aggregate(method, nsr, &cell));
        }
    }
    Ok(SweepResult {
        config: config.clone(),
        trials,
        aggregates,
    })
}

impl SweepResult {
    pub fn aggregates_for(&self, method: Method) -> impl Iterator<Item = &Aggregate> {
        self.aggregates.iter().filter(move |a| a.method == method)
    }

    /// Last grid point whose success rate is at least 0.5.
    pub fn transition_nsr(&self, method: Method) -> Option<f64> {
        self.aggregates_for(method)
            .filter(|a| a.success_rate >= 0.5)
            .map(|a| a.nsr)
            .last()
    }

    /// Trial rows, then a second header and the aggregate rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        w.write_record([
            "method",
            "nsr",
            "trial",
            "seed",
            "hausdorff_rl",
            "success",
            "runtime_ms",
        ])?;
        for r in &self.trials {
            w.write_record([
                r.method.name().to_string(),
                r.nsr.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.hausdorff_rl.to_string(),
                r.success.to_string(),
                r.runtime_ms.map(|t| t.to_string()).unwrap_or_default(),
            ])?;
        }
        w.write_record(["method", "nsr", "success_rate", "mean_hausdorff_rl", "failures"])?;
        for a in &self.aggregates {
            w.write_record([
                a.method.name().to_string(),
                a.nsr.to_string(),
                a.success_rate.to_string(),
                a.mean_hausdorff_rl.to_string(),
                a.failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Success rate and mean Hausdorff error against NSR.
    pub fn to_svg(&self) -> String {
        let mut rate = Plot::new("Success rate", "NSR", "success rate", Style::Line);
        rate.y_range = Some((0.0, 1.0));
        let mut err = Plot::new("Average Hausdorff distance", "NSR", "mean HM (RL)", Style::Line);
        let mut methods: Vec<Method> = self.aggregates.iter().map(|a| a.method).collect();
        methods.dedup();
        for m in methods {
            let cells: Vec<&Aggregate> = self.aggregates_for(m).collect();
            rate = rate.with_series(m.name(), cells.iter().map(|a| (a.nsr, a.success_rate)).collect());
            err = err.with_series(m.name(), cells.iter().map(|a| (a.nsr, a.mean_hausdorff_rl)).collect());
        }
        Plot::stack_svg(&[rate, err])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Figure2Config {
    #[serde(rename = "M")]
    pub degree: usize,
    #[serde(rename = "s")]
    pub sparsity: usize,
    pub separation_band_rl: (f64, f64),
    pub placement: Placement,
    pub dynamic_range: f64,
    pub signed: bool,
    pub nsr: f64,
    pub seed: u64,
    #[serde(rename = "L_override")]
    pub split_override: Option<usize>,
    pub music_grid_density: usize,
}

impl Default for Figure2Config {
    fn default() -> Self {
        Self {
            degree: 100,
            sparsity: 15,
            separation_band_rl: (3.0, 4.0),
            placement: Placement::default(),
            dynamic_range: 10.0,
            signed: false,
            nsr: 0.1,
            seed: 2,
            split_override: None,
            music_grid_density: DEFAULT_GRID_DENSITY,
        }
    }
}

impl Figure2Config {
    fn model_spec(&self, seed: u64) -> RandomModelSpec {
        RandomModelSpec {
            placement: self.placement,
            ..RandomModelSpec::new(
                self.sparsity,
                self.separation_band_rl,
                self.degree,
                AmplitudeLaw::RealDynamicRange {
                    ratio: self.dynamic_range,
                    signed: self.signed,
                },
                seed,
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub hausdorff_rl: f64,
    pub estimate: Option<EstimationResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure2Result {
    pub config: Figure2Config,
    pub model: SpectralModel,
    pub nu: f64,
    pub outcomes: Vec<MethodOutcome>,
}

pub fn run_figure2(config: &Figure2Config) -> Result<Figure2Result> {
    let instance = trial_instance(|s| config.model_spec(s), config.degree, config.nsr, config.seed)?;
    let outcomes = [Method::Esprit, Method::Music]
        .into_iter()
        .map(|method| {
            let est = estimate_with(
                method,
                &instance.samples,
                config.sparsity,
                config.split_override,
                config.music_grid_density,
            );
            match est.and_then(|e| hausdorff_distance(&e.frequencies, instance.model.frequencies()).map(|d| (e, d))) {
                Ok((e, d)) => MethodOutcome {
                    method,
                    hausdorff_rl: d * config.degree as f64,
                    estimate: Some(e),
                    error: None,
                },
                Err(e) => MethodOutcome {
                    method,
                    hausdorff_rl: f64::INFINITY,
                    estimate: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(Figure2Result {
        config: *config,
        model: instance.model,
        nu: instance.nu,
        outcomes,
    })
}

/// Per-seed `(ESPRIT, MUSIC)` Hausdorff errors in RL for seeds
/// `derive_seed(config.seed, 0, t)`.
pub fn figure2_trials(config: &Figure2Config, trials: usize, exec: Execution) -> Result<Vec<(f64, f64)>> {
    let results = map_indexed(trials, exec, |t| {
        let cfg = Figure2Config {
            seed: derive_seed(config.seed, 0, t as u64),
            ..*config
        };
        run_figure2(&cfg)
    });
    results
        .into_iter()
        .map(|r| r.map(|f| (f.outcomes[0].hausdorff_rl, f.outcomes[1].hausdorff_rl)))
        .collect()
}

impl Figure2Result {
    /// Stems of the true amplitudes and of each method's real-part estimates.
    pub fn to_svg(&self) -> String {
        let mut plot = Plot::new("Reconstruction", "frequency", "amplitude", Style::Stem).with_series(
            "true",
            self.model
                .frequencies()
                .iter()
                .zip(self.model.amplitudes())
                .map(|(&w, x)| (w, x.re))
                .collect(),
        );
        for o in &self.outcomes {
            if let Some(e) = &o.estimate {
                let label = format!("{} ({:.3} RL)", o.method.name(), o.hausdorff_rl);
                plot = plot.with_series(
                    &label,
                    e.frequencies
                        .iter()
                        .zip(&e.amplitudes)
                        .map(|(&w, x)| (w, x.re))
                        .collect(),
                );
            }
        }
        plot.to_svg()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub method: Method,
    pub mean_runtime_ms: f64,
    pub trials: usize,
}

/// Mean wall-clock estimation time per method over the same instances.
/// Always runs sequentially so that timings are not distorted by
/// contention.
pub fn timing_comparison(config: &ExperimentConfig) -> Result<Vec<TimingSummary>> {
    let cfg = ExperimentConfig {
        record_runtime: true,
        ..config.clone()
    };
    let sweep = run_sweep(&cfg, Execution::Sequential)?;
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    Ok(methods
        .into_iter()
        .map(|method| {
            let times: Vec<f64> = sweep
                .trials
                .iter()
                .filter(|r| r.method == method)
                .filter_map(|r| r.runtime_ms)
                .collect();
            TimingSummary {
                method,
                mean_runtime_ms: times.iter().sum::<f64>() / times.len() as f64,
                trials: times.len(),
            }
        })
        .collect())
}
