//! Experiment harness: Gaussian two-class data, accuracy/Brier metrics, repeated-trial
//! benchmarks over ensemble sizes and an overlap sweep over the class spread.
//!
//! Every random draw is derived from the spec's master seed and its position
//! (repetition, ensemble size, test index), so results do not depend on thread count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify_single, Measurement};
use crate::encoding::{FeatureVector2D, Label, LabeledDataset, LabeledPoint, RegisterLayout};
use crate::ensemble::{run_ensemble, EnsembleConfig, EnsembleMode};
use crate::error::{Error, Result};
use crate::qsim::MAX_QUBITS;
use crate::seed::{self, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub n_per_class: usize,
    pub mean0: [f64; 2],
    pub mean1: [f64; 2],
    /// Common per-axis standard deviation.
    pub sigma: f64,
    pub seed: u64,
}

impl GaussianSpec {
    /// 100 points per class around `(1, 0.3)` and `(0.3, 1)` with spread 0.3.
    pub fn reference(seed: u64) -> Self {
        Self {
            n_per_class: 100,
            mean0: [1.0, 0.3],
            mean1: [0.3, 1.0],
            sigma: 0.3,
            seed,
        }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self {
            sigma,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::validation("n_per_class must be >= 1"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::validation(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.mean0.iter().chain(&self.mean1).any(|m| !m.is_finite()) {
            return Err(Error::validation("class means must be finite"));
        }
        Ok(())
    }
}

/// Class-0 points followed by class-1 points, deterministic in `spec.seed`.
pub fn gen_gaussian_dataset(spec: &GaussianSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(2 * spec.n_per_class);
    for (mean, label) in [(spec.mean0, Label::Zero), (spec.mean1, Label::One)] {
        for _ in 0..spec.n_per_class {
            let features = loop {
                let v = FeatureVector2D::new(
                    mean[0] + noise.sample(&mut rng),
                    mean[1] + noise.sample(&mut rng),
                );
                if v.check_encodable().is_ok() {
                    break v;
                }
            };
            points.push(LabeledPoint { features, label });
        }
    }
    LabeledDataset::new(points)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::validation(format!(
            "length mismatch: {a} predictions, {b} labels"
        )));
    }
    if a == 0 {
        return Err(Error::validation("no predictions to score"));
    }
    Ok(())
}

pub fn accuracy(decisions: &[Label], labels: &[Label]) -> Result<f64> {
    check_lengths(decisions.len(), labels.len())?;
    let hits = decisions.iter().zip(labels).filter(|(d, l)| d == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean squared difference between the class-1 probability and the 0/1 label.
pub fn brier(probs: &[f64], labels: &[Label]) -> Result<f64> {
    check_lengths(probs.len(), labels.len())?;
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, l)| (p - l.as_f64()).powi(2))
        .sum();
    Ok(sum / labels.len() as f64)
}

/// How the ensemble prediction for each test point is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMode {
    #[default]
    Trajectories,
    /// Full entangled circuit whenever it fits the simulator, trajectories otherwise.
    FullWhereFeasible,
}

/// How the `B` training points of each ensemble are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// `B / 2` points from each class (for `B >= 2`).
    #[default]
    Balanced,
    /// `B` points from the whole training set, ignoring labels.
    Uniform,
}

/// What a new repetition redraws.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resample {
    /// Fresh dataset, split and training selections.
    #[default]
    Data,
    /// Dataset and split fixed by the master seed; only the training selections change.
    SelectionOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub repetitions: usize,
    pub train_frac: f64,
    pub mode: BenchMode,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default)]
    pub resample: Resample,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            repetitions: 10,
            train_frac: 0.9,
            mode: BenchMode::Trajectories,
            selection: Selection::Balanced,
            resample: Resample::Data,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepMetrics {
    pub rep: usize,
    pub accuracy: f64,
    pub brier: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub b: usize,
    pub sigma: f64,
    pub repetitions: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub brier_mean: f64,
    pub brier_std: f64,
    pub per_rep: Vec<RepMetrics>,
}

impl TrialReport {
    fn from_reps(b: usize, sigma: f64, per_rep: Vec<RepMetrics>) -> Self {
        let acc: Vec<f64> = per_rep.iter().map(|r| r.accuracy).collect();
        let bri: Vec<f64> = per_rep.iter().map(|r| r.brier).collect();
        let (accuracy_mean, accuracy_std) = mean_std(&acc);
        let (brier_mean, brier_std) = mean_std(&bri);
        Self {
            b,
            sigma,
            repetitions: per_rep.len(),
            accuracy_mean,
            accuracy_std,
            brier_mean,
            brier_std,
            per_rep,
        }
    }

    pub fn summary(&self) -> DistributionSummary {
        let acc: Vec<f64> = self.per_rep.iter().map(|r| r.accuracy).collect();
        let bri: Vec<f64> = self.per_rep.iter().map(|r| r.brier).collect();
        DistributionSummary {
            b: self.b,
            sigma: self.sigma,
            accuracy: Quartiles::of(&acc),
            brier: Quartiles::of(&bri),
        }
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Five-number summary for box plots (linear interpolation between order statistics).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            if v.is_empty() {
                return f64::NAN;
            }
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Self {
            min: q(0.0),
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: q(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub b: usize,
    pub sigma: f64,
    pub accuracy: Quartiles,
    pub brier: Quartiles,
}

struct Split {
    train: LabeledDataset,
    test: LabeledDataset,
}

fn split_dataset(data: &LabeledDataset, train_frac: f64, seed: u64) -> Result<Split> {
    let n = data.len();
    let n_train = (train_frac * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::validation(format!(
            "train fraction {train_frac} leaves an empty split of {n} points"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(Split {
        train: data.select(&idx[..n_train])?,
        test: data.select(&idx[n_train..])?,
    })
}

/// `b` training indices: a random subset without replacement while `b <= n_train`,
/// a random order repeated cyclically otherwise.
pub fn select_training(n_train: usize, b: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n_train).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.iter().copied().cycle().take(b).collect()
}

/// `b / 2` indices of each class (each drawn like [`select_training`]) in random order.
/// A single point, or a training set holding one class only, falls back to a uniform draw.
pub fn select_training_balanced(labels: &[Label], b: usize, seed: u64) -> Vec<usize> {
    let (ones, zeros): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i].bit());
    if b < 2 || ones.is_empty() || zeros.is_empty() {
        return select_training(labels.len(), b, seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |class: Vec<usize>, k: usize| {
        let mut class = class;
        class.shuffle(&mut rng);
        class.iter().copied().cycle().take(k).collect::<Vec<_>>()
    };
    let mut out = pick(zeros, b / 2);
    out.extend(pick(ones, b - b / 2));
    out.shuffle(&mut rng);
    out
}

fn check_bench_args(b_values: &[usize], options: &BenchOptions) -> Result<()> {
    if b_values.is_empty() {
        return Err(Error::validation("no ensemble sizes given"));
    }
    if let Some(b) = b_values.iter().find(|b| !b.is_power_of_two()) {
        return Err(Error::validation(format!(
            "ensemble size {b} is not a power of two"
        )));
    }
    if options.repetitions == 0 {
        return Err(Error::validation("repetitions must be >= 1"));
    }
    if !(options.train_frac > 0.0 && options.train_frac < 1.0) {
        return Err(Error::validation(format!(
            "train fraction must lie in (0, 1), got {}",
            options.train_frac
        )));
    }
    Ok(())
}

/// Probability of class 1 for one test point from an ensemble over `selection`.
fn ensemble_prob(
    train: &LabeledDataset,
    selection: &[usize],
    test: &FeatureVector2D,
    mode: BenchMode,
) -> Result<f64> {
    let chosen = train.select(selection)?;
    if selection.len() == 1 {
        let p = chosen.points()[0];
        return Ok(classify_single(&p.features, p.label, test, Measurement::Exact)?.prob_one);
    }
    let d = selection.len().trailing_zeros() as usize;
    let mode = match mode {
        BenchMode::FullWhereFeasible
            if RegisterLayout::required_qubits(d, chosen.len()) <= MAX_QUBITS =>
        {
            EnsembleMode::FullCircuit
        }
        _ => EnsembleMode::Trajectories,
    };
    Ok(run_ensemble(&chosen, test, &EnsembleConfig::new(d, mode))?.prob_one)
}

fn run_repetition(
    spec: &GaussianSpec,
    b: usize,
    rep: usize,
    options: &BenchOptions,
) -> Result<RepMetrics> {
    let draw = match options.resample {
        Resample::Data => rep as u64,
        Resample::SelectionOnly => 0,
    };
    let data =
        gen_gaussian_dataset(&spec.with_seed(seed::derive(spec.seed, Stream::Data, &[draw])))?;
    let split = split_dataset(
        &data,
        options.train_frac,
        seed::derive(spec.seed, Stream::Split, &[draw]),
    )?;
    let train_labels: Vec<Label> = split.train.points().iter().map(|p| p.label).collect();
    let probs = split
        .test
        .points()
        .par_iter()
        .enumerate()
        .map(|(j, point)| {
            let sel_seed = seed::derive(
                spec.seed,
                Stream::Selection,
                &[rep as u64, b as u64, j as u64],
            );
            let selection = match options.selection {
                Selection::Balanced => select_training_balanced(&train_labels, b, sel_seed),
                Selection::Uniform => select_training(split.train.len(), b, sel_seed),
            };
            ensemble_prob(&split.train, &selection, &point.features, options.mode)
        })
        .collect::<Result<Vec<f64>>>()?;
    let labels: Vec<Label> = split.test.points().iter().map(|p| p.label).collect();
    let decisions: Vec<Label> = probs
        .iter()
        .map(|&p| crate::classifier::decide(p))
        .collect();
    Ok(RepMetrics {
        rep,
        accuracy: accuracy(&decisions, &labels)?,
        brier: brier(&probs, &labels)?,
    })
}

/// One report per ensemble size. Each repetition draws a fresh dataset and split (shared
/// across ensemble sizes); each test point draws its own training selection.
pub fn run_benchmark(
    spec: &GaussianSpec,
    b_values: &[usize],
    options: &BenchOptions,
) -> Result<Vec<TrialReport>> {
    spec.validate()?;
    check_bench_args(b_values, options)?;
    b_values
        .iter()
        .map(|&b| {
            let per_rep = (0..options.repetitions)
                .into_par_iter()
                .map(|rep| run_repetition(spec, b, rep, options))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrialReport::from_reps(b, spec.sigma, per_rep))
        })
        .collect()
}

/// Benchmark grid over increasing class spreads, sigma-major.
pub fn run_overlap_sweep(
    base: &GaussianSpec,
    sigmas: &[f64],
    b_values: &[usize],
    options: &BenchOptions,
) -> Result<Vec<TrialReport>> {
    if sigmas.is_empty() {
        return Err(Error::validation("no sigmas given"));
    }
    if sigmas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("sigmas must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(sigmas.len() * b_values.len());
    for &sigma in sigmas {
        out.extend(run_benchmark(&base.with_sigma(sigma), b_values, options)?);
    }
    Ok(out)
}

/// Flat `b,sigma,rep,accuracy,brier` rows.
pub fn write_trials_csv(reports: &[TrialReport], writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["b", "sigma", "rep", "accuracy", "brier"])
        .map_err(io)?;
    for r in reports {
        for m in &r.per_rep {
            w.write_record([
                r.b.to_string(),
                r.sigma.to_string(),
                m.rep.to_string(),
                m.accuracy.to_string(),
                m.brier.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    use Label::{One, Zero};

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[Zero, One, One], &[Zero, One, One]).unwrap(), 1.0);
        assert_eq!(accuracy(&[Zero, Zero], &[One, One]).unwrap(), 0.0);
        assert_eq!(
            accuracy(&[Zero, One, Zero, One], &[Zero, One, One, One]).unwrap(),
            0.75
        );
        assert!(accuracy(&[Zero], &[Zero, One]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(&[1.0, 0.0], &[One, Zero]).unwrap(), 0.0);
        assert_eq!(brier(&[0.5, 0.5], &[Zero, One]).unwrap(), 0.25);
        assert!((brier(&[0.9], &[Zero]).unwrap() - 0.81).abs() < 1e-15);
        assert!(brier(&[0.9], &[]).is_err());
    }

    #[test]
    fn gaussian_shape_and_determinism() {
        let spec = GaussianSpec::reference(42);
        let ds = gen_gaussian_dataset(&spec).unwrap();
        assert_eq!(ds.len(), 200);
        assert_eq!(ds.points().iter().filter(|p| p.label == One).count(), 100);
        assert_eq!(ds, gen_gaussian_dataset(&spec).unwrap());
        assert_ne!(ds, gen_gaussian_dataset(&spec.with_seed(43)).unwrap());
    }

    #[test]
    fn degenerate_overlap() {
        let spec = GaussianSpec {
            n_per_class: 1,
            mean0: [1.0, 1.0],
            mean1: [1.0, 1.0],
            sigma: 1e-6,
            seed: 3,
        };
        let ds = gen_gaussian_dataset(&spec).unwrap();
        let (a, b) = (ds.points()[0], ds.points()[1]);
        assert_ne!(a.label, b.label);
        assert!((a.features.x1 - b.features.x1).abs() < 1e-4);
        assert!((a.features.x2 - b.features.x2).abs() < 1e-4);
    }

    #[test]
    fn invalid_specs() {
        assert!(gen_gaussian_dataset(&GaussianSpec::reference(0).with_sigma(0.0)).is_err());
        let bad = GaussianSpec {
            n_per_class: 0,
            ..GaussianSpec::reference(0)
        };
        assert!(gen_gaussian_dataset(&bad).is_err());
    }

    #[test]
    fn selection_without_then_with_replacement() {
        let s = select_training(10, 4, 1);
        let mut u = s.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), 4);
        let s = select_training(3, 7, 1);
        assert_eq!(s.len(), 7);
        assert_eq!(s[0], s[3]);
        assert_eq!(s[1], s[4]);
    }

    #[test]
    fn balanced_selection_splits_classes() {
        let labels = [Zero, Zero, Zero, Zero, Zero, Zero, One, One, One];
        for seed in 0..20 {
            let s = select_training_balanced(&labels, 8, seed);
            assert_eq!(s.len(), 8);
            assert_eq!(s.iter().filter(|&&i| labels[i] == One).count(), 4);
        }
        assert_eq!(
            select_training_balanced(&labels, 1, 5),
            select_training(9, 1, 5)
        );
        assert_eq!(
            select_training_balanced(&[Zero, Zero], 2, 5),
            select_training(2, 2, 5)
        );
    }

    #[test]
    fn quartiles_linear() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!(
            (q.min, q.q1, q.median, q.q3, q.max),
            (1.0, 2.0, 3.0, 4.0, 5.0)
        );
        let q = Quartiles::of(&[0.0, 1.0]);
        assert_eq!((q.q1, q.median), (0.25, 0.5));
    }

    #[test]
    fn bench_argument_checks() {
        let spec = GaussianSpec {
            n_per_class: 5,
            ..GaussianSpec::reference(1)
        };
        let opts = BenchOptions::default();
        assert!(run_benchmark(&spec, &[3], &opts).is_err());
        assert!(run_benchmark(&spec, &[], &opts).is_err());
        let bad = BenchOptions {
            train_frac: 1.0,
            ..opts.clone()
        };
        assert!(run_benchmark(&spec, &[1], &bad).is_err());
        let tiny = BenchOptions {
            train_frac: 0.01,
            ..opts.clone()
        };
        assert!(matches!(
            run_benchmark(&spec, &[1], &tiny),
            Err(Error::Validation(_))
        ));
        assert!(run_overlap_sweep(&spec, &[0.5, 0.3], &[1], &opts).is_err());
    }

    #[test]
    fn csv_rows() {
        let r = TrialReport::from_reps(
            2,
            0.3,
            vec![RepMetrics {
                rep: 0,
                accuracy: 0.5,
                brier: 0.25,
            }],
        );
        let mut buf = Vec::new();
        write_trials_csv(&[r], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "b,sigma,rep,accuracy,brier\n2,0.3,0,0.5,0.25\n"
        );
    }
}
