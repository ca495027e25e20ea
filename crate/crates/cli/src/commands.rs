//! Subcommand flags, resolved configurations and their execution.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use qensemble::bench::{
    run_benchmark, run_overlap_sweep, write_trials_csv, BenchMode, BenchOptions, GaussianSpec,
    Resample, Selection, TrialReport,
};
use qensemble::classifier::{classify_single, Measurement};
use qensemble::encoding::{load_dataset_csv, FeatureVector2D, Label, LabeledDataset};
use qensemble::ensemble::{run_ensemble, EnsembleConfig, EnsembleMode, PlanChoice};
use qensemble::oracle::{ensemble_error, EnsembleErrorParams};
use qensemble::seed::{self, Stream};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{CliError, Output};

fn measurement(shots: Option<u64>, seed: u64) -> Measurement {
    match shots {
        Some(shots) => Measurement::Shots { shots, seed },
        None => Measurement::Exact,
    }
}

fn mode_name(m: &Measurement) -> &'static str {
    match m {
        Measurement::Exact => "exact",
        Measurement::Shots { .. } => "shots",
    }
}

#[derive(Args, Serialize)]
pub struct ClassifyFlags {
    /// Training vector `x1,x2`.
    #[arg(long, allow_hyphen_values = true)]
    train: Option<FeatureVector2D>,
    /// Training label, 0 or 1.
    #[arg(long)]
    label: Option<Label>,
    /// Test vector `x1,x2`.
    #[arg(long, allow_hyphen_values = true)]
    test: Option<FeatureVector2D>,
    /// Estimate from this many shots instead of reading the exact probability.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
pub struct ClassifyConfig {
    train: FeatureVector2D,
    label: Label,
    test: FeatureVector2D,
    #[serde(default)]
    shots: Option<u64>,
    #[serde(default)]
    seed: u64,
}

pub fn classify(cfg: ClassifyConfig) -> Result<Output, CliError> {
    let m = measurement(cfg.shots, cfg.seed);
    let r = classify_single(&cfg.train, cfg.label, &cfg.test, m)?;
    Ok(Output::json(json!({
        "prob_one": r.prob_one,
        "decision": r.decision,
        "mode": mode_name(&m),
        "config": cfg,
    })))
}

#[derive(Clone, Copy, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    /// One entangled circuit, one measurement.
    #[default]
    Full,
    /// One classifier run per trajectory, averaged.
    Traj,
}

#[derive(Clone, Copy, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanArg {
    /// Trajectory `b` reads point `b mod n`.
    #[default]
    Default,
    /// Seeded random swap sequences.
    Random,
}

#[derive(Args, Serialize)]
pub struct EnsembleFlags {
    /// Training CSV with header `x1,x2,y`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Test vector `x1,x2`.
    #[arg(long, allow_hyphen_values = true)]
    test: Option<FeatureVector2D>,
    /// Control qubits; the ensemble has `2^d` members.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    plan: Option<PlanArg>,
    /// Seed for `--plan random`.
    #[arg(long)]
    plan_seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
pub struct EnsembleRunConfig {
    data: PathBuf,
    test: FeatureVector2D,
    d: usize,
    #[serde(default)]
    mode: ModeArg,
    #[serde(default)]
    shots: Option<u64>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    plan: PlanArg,
    #[serde(default)]
    plan_seed: u64,
}

pub fn ensemble(cfg: EnsembleRunConfig) -> Result<Output, CliError> {
    let dataset =
        load_dataset_csv(&cfg.data).with_context(|| format!("loading {}", cfg.data.display()))?;
    let mode = match cfg.mode {
        ModeArg::Full => EnsembleMode::FullCircuit,
        ModeArg::Traj => EnsembleMode::Trajectories,
    };
    let plan = match cfg.plan {
        PlanArg::Default => PlanChoice::Default,
        PlanArg::Random => PlanChoice::Random {
            seed: cfg.plan_seed,
        },
    };
    let m = measurement(cfg.shots, cfg.seed);
    let config = EnsembleConfig::new(cfg.d, mode)
        .with_measurement(m)
        .with_plan(plan);
    let r = run_ensemble(&dataset, &cfg.test, &config)?;
    Ok(Output::json(json!({
        "prob_one": r.prob_one,
        "decision": r.decision,
        "b": config.ensemble_size(),
        "mode": mode_name(&m),
        "per_trajectory": r.per_trajectory,
        "config": cfg,
    })))
}

#[derive(Args, Serialize)]
pub struct ToyFlags {
    /// Replace the four-point toy set with this many random four-point datasets.
    #[arg(long)]
    random_datasets: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Serialize, Deserialize)]
pub struct ToyConfig {
    #[serde(default)]
    random_datasets: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    shots: Option<u64>,
}

/// Four points (two per class) and a test vector drawn around the reference class means.
fn random_toy(seed: u64, k: usize) -> qensemble::Result<(LabeledDataset, FeatureVector2D)> {
    let spec = GaussianSpec {
        n_per_class: 2,
        ..GaussianSpec::reference(seed::derive(seed, Stream::Data, &[k as u64]))
    };
    let probe = GaussianSpec {
        n_per_class: 1,
        ..spec.with_seed(seed::derive(seed, Stream::Data, &[k as u64, 1]))
    };
    let test = qensemble::bench::gen_gaussian_dataset(&probe)?.points()[k % 2].features;
    Ok((qensemble::bench::gen_gaussian_dataset(&spec)?, test))
}

pub fn toy(cfg: ToyConfig) -> Result<Output, CliError> {
    let datasets = if cfg.random_datasets == 0 {
        vec![LabeledDataset::toy()]
    } else {
        (0..cfg.random_datasets)
            .map(|k| random_toy(cfg.seed, k))
            .collect::<qensemble::Result<_>>()?
    };
    let mut rows = Vec::with_capacity(datasets.len());
    for (k, (ds, test)) in datasets.iter().enumerate() {
        let m = measurement(
            cfg.shots,
            seed::derive(cfg.seed, Stream::Shots, &[k as u64]),
        );
        let traj = run_ensemble(
            ds,
            test,
            &EnsembleConfig::new(2, EnsembleMode::Trajectories).with_measurement(m),
        )?;
        let full = run_ensemble(
            ds,
            test,
            &EnsembleConfig::new(2, EnsembleMode::FullCircuit).with_measurement(m),
        )?;
        rows.push(json!({
            "dataset": k,
            "points": ds.points(),
            "test": test,
            "per_trajectory": traj.per_trajectory,
            "avg": traj.prob_one,
            "qensemble": full.prob_one,
        }));
    }
    let mode = if cfg.shots.is_some() {
        "shots"
    } else {
        "exact"
    };
    Ok(Output::json(
        json!({ "rows": rows, "mode": mode, "config": cfg }),
    ))
}

#[derive(Args, Serialize)]
pub struct TheoryFlags {
    /// Single-model errors, comma separated.
    #[arg(long, value_delimiter = ',')]
    e_model: Option<Vec<f64>>,
    /// Error correlations in [0, 1], comma separated.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Largest control register; rows cover B = 2^0 ..= 2^d_max.
    #[arg(long)]
    d_max: Option<u32>,
}

#[derive(Serialize, Deserialize)]
pub struct TheoryConfig {
    #[serde(default = "default_e_model")]
    e_model: Vec<f64>,
    #[serde(default = "default_rho")]
    rho: Vec<f64>,
    #[serde(default = "default_d_max")]
    d_max: u32,
}

fn default_e_model() -> Vec<f64> {
    vec![0.3]
}

fn default_rho() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn default_d_max() -> u32 {
    10
}

#[derive(Serialize)]
struct TheoryRow {
    e_model: f64,
    rho: f64,
    d: u32,
    b: u64,
    error: f64,
}

pub fn theory(cfg: TheoryConfig) -> Result<Output, CliError> {
    if cfg.d_max > 62 {
        return Err(CliError::Usage(format!(
            "d_max must be <= 62, got {}",
            cfg.d_max
        )));
    }
    let mut rows = Vec::new();
    for &e_model in &cfg.e_model {
        for &rho in &cfg.rho {
            for d in 0..=cfg.d_max {
                let b = 1u64 << d;
                let error = ensemble_error(&EnsembleErrorParams { e_model, rho, b })?;
                rows.push(TheoryRow {
                    e_model,
                    rho,
                    d,
                    b,
                    error,
                });
            }
        }
    }
    let json = json!({ "rows": rows, "config": cfg });
    Ok(Output {
        json,
        csv: Some(Box::new(move |w: &mut dyn Write| {
            writeln!(w, "e_model,rho,d,b,error")?;
            for r in &rows {
                writeln!(w, "{},{},{},{},{}", r.e_model, r.rho, r.d, r.b, r.error)?;
            }
            Ok(())
        })),
    })
}

#[derive(Args, Serialize)]
pub struct TrialFlags {
    /// Master seed for data, splits and training selections.
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions per ensemble size.
    #[arg(long)]
    reps: Option<usize>,
    /// Ensemble sizes (powers of two), comma separated.
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<usize>>,
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long)]
    train_frac: Option<f64>,
    /// How each ensemble draws its training points.
    #[arg(long, value_parser = ["balanced", "uniform"])]
    selection: Option<String>,
    /// What each repetition redraws.
    #[arg(long, value_parser = ["data", "selection_only"])]
    resample: Option<String>,
    /// How ensemble predictions are computed.
    #[arg(long, value_parser = ["trajectories", "full_where_feasible"])]
    mode: Option<String>,
}

#[derive(Serialize, Deserialize)]
pub struct TrialConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_reps")]
    reps: usize,
    #[serde(default = "default_b")]
    b: Vec<usize>,
    #[serde(default = "default_n_per_class")]
    n_per_class: usize,
    #[serde(default = "default_train_frac")]
    train_frac: f64,
    #[serde(default)]
    selection: Selection,
    #[serde(default)]
    mode: BenchMode,
}

fn default_reps() -> usize {
    10
}

fn default_b() -> Vec<usize> {
    vec![1, 2, 4, 8, 16]
}

fn default_n_per_class() -> usize {
    100
}

fn default_train_frac() -> f64 {
    0.9
}

fn default_sigma() -> f64 {
    0.3
}

fn default_sigmas() -> Vec<f64> {
    vec![0.3, 0.5, 0.7, 0.9]
}

fn default_sweep_resample() -> Resample {
    Resample::SelectionOnly
}

impl TrialConfig {
    fn spec(&self, sigma: f64) -> GaussianSpec {
        GaussianSpec {
            n_per_class: self.n_per_class,
            ..GaussianSpec::reference(self.seed)
        }
        .with_sigma(sigma)
    }

    fn options(&self, resample: Resample) -> BenchOptions {
        BenchOptions {
            repetitions: self.reps,
            train_frac: self.train_frac,
            mode: self.mode,
            selection: self.selection,
            resample,
        }
    }
}

#[derive(Args, Serialize)]
pub struct BenchmarkFlags {
    #[command(flatten)]
    #[serde(flatten)]
    trials: TrialFlags,
    /// Per-axis standard deviation of both classes.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct BenchmarkConfig {
    #[serde(flatten)]
    trials: TrialConfig,
    #[serde(default = "default_sigma")]
    sigma: f64,
    #[serde(default)]
    resample: Resample,
}

#[derive(Args, Serialize)]
pub struct SweepFlags {
    #[command(flatten)]
    #[serde(flatten)]
    trials: TrialFlags,
    /// Increasing class spreads, comma separated.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    trials: TrialConfig,
    #[serde(default = "default_sigmas")]
    sigmas: Vec<f64>,
    #[serde(default = "default_sweep_resample")]
    resample: Resample,
}

fn trial_output(reports: Vec<TrialReport>, config: serde_json::Value) -> Output {
    let summaries: Vec<_> = reports.iter().map(TrialReport::summary).collect();
    let json = json!({ "reports": reports, "summaries": summaries, "config": config });
    Output {
        json,
        csv: Some(Box::new(move |w: &mut dyn Write| {
            Ok(write_trials_csv(&reports, w)?)
        })),
    }
}

pub fn benchmark(cfg: BenchmarkConfig) -> Result<Output, CliError> {
    let reports = run_benchmark(
        &cfg.trials.spec(cfg.sigma),
        &cfg.trials.b,
        &cfg.trials.options(cfg.resample),
    )?;
    Ok(trial_output(
        reports,
        serde_json::to_value(&cfg).map_err(anyhow::Error::from)?,
    ))
}

pub fn sweep(cfg: SweepConfig) -> Result<Output, CliError> {
    let base = cfg.trials.spec(default_sigma());
    let reports = run_overlap_sweep(
        &base,
        &cfg.sigmas,
        &cfg.trials.b,
        &cfg.trials.options(cfg.resample),
    )?;
    Ok(trial_output(
        reports,
        serde_json::to_value(&cfg).map_err(anyhow::Error::from)?,
    ))
}
