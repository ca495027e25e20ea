//! Bagging ensemble built from superposed training-set permutations.
//!
//! The control register holds `d` qubits. Step `i` (1-based) entangles control qubit
//! `i - 1` with two permutations of the data register, `U(i,1)` and `U(i,2)`: a controlled
//! `U(i,1)`, an X on the control qubit, then a controlled `U(i,2)`. Once all steps have
//! run, control basis state `b` carries the data register transformed by
//!
//! ```text
//! V_b = U(d, j_d) ... U(2, j_2) U(1, j_1),   j_i = 1 + bit (i - 1) of b
//! ```
//!
//! In the usual `|c_1 ... c_d>` ket notation, `c_1` is the most significant control
//! qubit: qubit `d - j` holds `c_j`, so step `i` consumes `c_{d-i+1}` and `b` is the plain
//! integer value of the control register.
//!
//! The classifier always reads data position 0 (feature qubit 0, label qubit 0), the
//! *active position*. Trajectory `b` therefore predicts with whichever training point
//! `V_b` moved there.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    build_cosine_classifier, classify_single, CosineClassifierSpec, Measurement, PredictionResult,
};
use crate::encoding::{build_state_prep, FeatureVector2D, LabeledDataset, RegisterLayout};
use crate::error::{Error, Result};
use crate::qsim::{Circuit, GateOp, StateVector, MAX_QUBITS};
use crate::seed::{self, Stream};

/// Largest control register supported by the trajectory decomposition (B = 16384).
pub const MAX_TRAJECTORY_D: usize = 14;

/// Block name of the sampling-in-superposition stage inside emitted circuits.
pub const SAMPLING_BLOCK: &str = "sampling";

/// A permutation of data positions written as swaps applied left to right.
/// Each swap exchanges the feature and label qubits of two positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PositionPermutation {
    swaps: Vec<(usize, usize)>,
}

impl PositionPermutation {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_swaps(swaps: Vec<(usize, usize)>) -> Self {
        Self { swaps }
    }

    /// Swaps that rearrange positions so that position `p` ends up holding what was at
    /// `target[p]`. `target` must be a permutation of `0..target.len()`.
    pub fn from_arrangement(target: &[usize]) -> Result<Self> {
        let n = target.len();
        let mut seen = vec![false; n];
        for &t in target {
            if t >= n || std::mem::replace(&mut seen[t], true) {
                return Err(Error::validation(format!(
                    "{target:?} is not a permutation"
                )));
            }
        }
        let mut current: Vec<usize> = (0..n).collect();
        let mut swaps = Vec::new();
        for p in 0..n {
            if current[p] != target[p] {
                let q = (p + 1..n)
                    .find(|&q| current[q] == target[p])
                    .expect("checked permutation");
                current.swap(p, q);
                swaps.push((p, q));
            }
        }
        Ok(Self { swaps })
    }

    pub fn swaps(&self) -> &[(usize, usize)] {
        &self.swaps
    }

    pub fn is_identity_sequence(&self) -> bool {
        self.swaps.is_empty()
    }

    /// `arrangement[p]` is the original index of the point at position `p`.
    pub fn apply(&self, arrangement: &mut [usize]) {
        for &(p, q) in &self.swaps {
            arrangement.swap(p, q);
        }
    }

    fn validate(&self, n_positions: usize) -> Result<()> {
        for &(p, q) in &self.swaps {
            if p >= n_positions || q >= n_positions {
                return Err(Error::validation(format!(
                    "swap ({p}, {q}) touches a position outside the {n_positions}-point data register"
                )));
            }
            if p == q {
                return Err(Error::validation(format!("degenerate swap ({p}, {p})")));
            }
        }
        Ok(())
    }
}

/// The pair `U(i,1)`, `U(i,2)` of one sampling step.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapStep {
    pub first: PositionPermutation,
    pub second: PositionPermutation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapPlan {
    n_positions: usize,
    steps: Vec<SwapStep>,
}

impl SwapPlan {
    pub fn new(n_positions: usize, steps: Vec<SwapStep>) -> Result<Self> {
        if n_positions == 0 {
            return Err(Error::validation(
                "swap plan needs at least one data position",
            ));
        }
        if steps.is_empty() {
            return Err(Error::validation("swap plan needs at least one step"));
        }
        for s in &steps {
            s.first.validate(n_positions)?;
            s.second.validate(n_positions)?;
        }
        Ok(Self { n_positions, steps })
    }

    pub fn identity(d: usize, n_positions: usize) -> Result<Self> {
        Self::new(n_positions, vec![SwapStep::default(); d])
    }

    /// Plan whose trajectory `b` reads training point `b mod n_positions`.
    ///
    /// When `2^d <= n` or `n` is a power of two, `U(i,2)` is the single layer of disjoint
    /// swaps `p <-> p xor 2^(i-1)` and `V_b` is "xor the position with `b`". Otherwise
    /// `U(i,2)` is a cyclic rotation by `2^(i-1) mod n` and `V_b` rotates by `b mod n`.
    /// `U(i,1)` is always the identity.
    pub fn default_plan(d: usize, n_positions: usize) -> Result<Self> {
        if n_positions == 0 {
            return Err(Error::validation(
                "swap plan needs at least one data position",
            ));
        }
        let use_xor = n_positions.is_power_of_two()
            || (d < usize::BITS as usize && (1usize << d) <= n_positions);
        let steps = (0..d)
            .map(|i| {
                let second = if use_xor {
                    let limit = if n_positions.is_power_of_two() {
                        n_positions
                    } else {
                        1 << d
                    };
                    let mask = if i < usize::BITS as usize {
                        1usize << i
                    } else {
                        0
                    };
                    if mask >= limit {
                        PositionPermutation::identity()
                    } else {
                        PositionPermutation::from_swaps(
                            (0..limit)
                                .filter(|p| p & mask == 0)
                                .map(|p| (p, p | mask))
                                .collect(),
                        )
                    }
                } else {
                    let shift = pow2_mod(i, n_positions);
                    let target: Vec<usize> = (0..n_positions)
                        .map(|p| (p + shift) % n_positions)
                        .collect();
                    PositionPermutation::from_arrangement(&target)
                        .expect("rotation is a permutation")
                };
                SwapStep {
                    first: PositionPermutation::identity(),
                    second,
                }
            })
            .collect();
        Self::new(n_positions, steps)
    }

    /// Seeded random plan: every `U(i,j)` is a random-length sequence of random swaps.
    pub fn random(d: usize, n_positions: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random_perm = |rng: &mut ChaCha8Rng| {
            if n_positions < 2 {
                return PositionPermutation::identity();
            }
            let len = rng.random_range(0..=n_positions);
            PositionPermutation::from_swaps(
                (0..len)
                    .map(|_| {
                        let p = rng.random_range(0..n_positions);
                        let q = (p + rng.random_range(1..n_positions)) % n_positions;
                        (p, q)
                    })
                    .collect(),
            )
        };
        let steps = (0..d)
            .map(|_| {
                let first = random_perm(&mut rng);
                let second = random_perm(&mut rng);
                SwapStep { first, second }
            })
            .collect();
        Self::new(n_positions, steps)
    }

    pub fn d(&self) -> usize {
        self.steps.len()
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    pub fn steps(&self) -> &[SwapStep] {
        &self.steps
    }

    pub fn trajectory_count(&self) -> usize {
        1 << self.d()
    }

    /// The permutations composing `V_b`, in application order.
    pub fn trajectory_factors(&self, b: usize) -> impl Iterator<Item = &PositionPermutation> + '_ {
        self.steps
            .iter()
            .enumerate()
            .map(move |(i, s)| if b >> i & 1 == 1 { &s.second } else { &s.first })
    }

    /// Position contents after `V_b`: entry `p` is the original index of the point moved to `p`.
    pub fn arrangement(&self, b: usize) -> Vec<usize> {
        let mut arr: Vec<usize> = (0..self.n_positions).collect();
        for perm in self.trajectory_factors(b) {
            perm.apply(&mut arr);
        }
        arr
    }

    /// Training point read by the classifier in trajectory `b`.
    pub fn active_point(&self, b: usize) -> usize {
        self.arrangement(b)[0]
    }
}

fn pow2_mod(exp: usize, modulus: usize) -> usize {
    (0..exp).fold(1 % modulus, |acc, _| (acc * 2) % modulus)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    /// One statevector holding every trajectory; the classifier runs once.
    #[default]
    FullCircuit,
    /// One standalone classifier run per trajectory, averaged classically.
    Trajectories,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PlanChoice {
    #[default]
    Default,
    Random {
        seed: u64,
    },
    Explicit {
        plan: SwapPlan,
    },
}

impl PlanChoice {
    pub fn resolve(&self, d: usize, n_positions: usize) -> Result<SwapPlan> {
        let plan = match self {
            PlanChoice::Default => SwapPlan::default_plan(d, n_positions)?,
            PlanChoice::Random { seed } => SwapPlan::random(d, n_positions, *seed)?,
            PlanChoice::Explicit { plan } => {
                SwapPlan::new(plan.n_positions(), plan.steps().to_vec())?
            }
        };
        if plan.d() != d || plan.n_positions() != n_positions {
            return Err(Error::validation(format!(
                "swap plan is for d = {}, {} points; run needs d = {d}, {n_positions} points",
                plan.d(),
                plan.n_positions()
            )));
        }
        Ok(plan)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub d: usize,
    pub mode: EnsembleMode,
    pub measurement: Measurement,
    pub swap_plan: PlanChoice,
}

impl EnsembleConfig {
    pub fn new(d: usize, mode: EnsembleMode) -> Self {
        Self {
            d,
            mode,
            measurement: Measurement::Exact,
            swap_plan: PlanChoice::Default,
        }
    }

    pub fn with_measurement(mut self, measurement: Measurement) -> Self {
        self.measurement = measurement;
        self
    }

    pub fn with_plan(mut self, plan: PlanChoice) -> Self {
        self.swap_plan = plan;
        self
    }

    pub fn ensemble_size(&self) -> usize {
        1 << self.d
    }
}

/// Walsh-Hadamard on the control register followed by the `d` sampling steps.
pub fn build_sampling_stage(plan: &SwapPlan, layout: &RegisterLayout) -> Result<Circuit> {
    layout.validate()?;
    if plan.d() != layout.d() {
        return Err(Error::validation(format!(
            "plan has {} steps but layout has {} control qubits",
            plan.d(),
            layout.d()
        )));
    }
    if plan.n_positions() != layout.n_points() {
        return Err(Error::validation(format!(
            "plan permutes {} positions but layout holds {} points",
            plan.n_positions(),
            layout.n_points()
        )));
    }
    let mut circuit = Circuit::new(layout.num_qubits());
    for &c in &layout.control {
        circuit.push(GateOp::h(c))?;
    }
    for (step, &c) in plan.steps().iter().zip(&layout.control) {
        push_controlled_permutation(&mut circuit, &step.first, c, layout)?;
        circuit.push(GateOp::x(c))?;
        push_controlled_permutation(&mut circuit, &step.second, c, layout)?;
    }
    Ok(circuit)
}

fn push_controlled_permutation(
    circuit: &mut Circuit,
    perm: &PositionPermutation,
    control: usize,
    layout: &RegisterLayout,
) -> Result<()> {
    for &(p, q) in perm.swaps() {
        circuit.push(GateOp::cswap(control, layout.feature[p], layout.feature[q]))?;
        circuit.push(GateOp::cswap(control, layout.label[p], layout.label[q]))?;
    }
    Ok(())
}

/// Classifier wired to the active data position.
pub fn active_classifier_spec(layout: &RegisterLayout) -> CosineClassifierSpec {
    CosineClassifierSpec {
        train_qubit: layout.feature[0],
        label_qubit: layout.label[0],
        test_qubit: layout.test,
        prediction_qubit: layout.prediction,
    }
}

/// State preparation, sampling stage and a single classifier instance.
pub fn build_ensemble_circuit(
    dataset: &LabeledDataset,
    test: &FeatureVector2D,
    plan: &SwapPlan,
) -> Result<(Circuit, RegisterLayout)> {
    let required = RegisterLayout::required_qubits(plan.d(), dataset.len());
    if required > MAX_QUBITS {
        return Err(Error::Capacity {
            required,
            limit: MAX_QUBITS,
        });
    }
    let layout = RegisterLayout::standard(plan.d(), dataset.len());
    let mut circuit = Circuit::new(layout.num_qubits());
    circuit.append(&build_state_prep(dataset, test, &layout)?)?;
    circuit.append_block(SAMPLING_BLOCK, &build_sampling_stage(plan, &layout)?)?;
    circuit.append(&build_cosine_classifier(
        &active_classifier_spec(&layout),
        layout.num_qubits(),
    )?)?;
    Ok((circuit, layout))
}

pub fn run_ensemble(
    dataset: &LabeledDataset,
    test: &FeatureVector2D,
    config: &EnsembleConfig,
) -> Result<PredictionResult> {
    match config.mode {
        EnsembleMode::FullCircuit => run_ensemble_full(dataset, test, config),
        EnsembleMode::Trajectories => run_ensemble_trajectories(dataset, test, config),
    }
}

/// Simulates the whole entangled circuit and reads the prediction qubit once.
pub fn run_ensemble_full(
    dataset: &LabeledDataset,
    test: &FeatureVector2D,
    config: &EnsembleConfig,
) -> Result<PredictionResult> {
    check_d(config.d)?;
    let plan = config.swap_plan.resolve(config.d, dataset.len())?;
    let (circuit, layout) = build_ensemble_circuit(dataset, test, &plan)?;
    let mut state = StateVector::zero(layout.num_qubits())?;
    state.run(&circuit)?;
    let p = config.measurement.read(&state, layout.prediction)?;
    Ok(PredictionResult::from_prob(p))
}

/// Runs the standalone classifier on each trajectory's active point and averages.
/// In shot mode every trajectory gets its own shot budget and derived seed.
pub fn run_ensemble_trajectories(
    dataset: &LabeledDataset,
    test: &FeatureVector2D,
    config: &EnsembleConfig,
) -> Result<PredictionResult> {
    check_d(config.d)?;
    if config.d > MAX_TRAJECTORY_D {
        return Err(Error::Capacity {
            required: config.d,
            limit: MAX_TRAJECTORY_D,
        });
    }
    test.check_encodable()?;
    let plan = config.swap_plan.resolve(config.d, dataset.len())?;
    let base_seed = match config.measurement {
        Measurement::Shots { seed, .. } => seed,
        Measurement::Exact => 0,
    };
    let per_trajectory = (0..plan.trajectory_count())
        .into_par_iter()
        .map(|b| {
            let point = dataset.points()[plan.active_point(b)];
            let m =
                config
                    .measurement
                    .reseeded(seed::derive(base_seed, Stream::Shots, &[b as u64]));
            classify_single(&point.features, point.label, test, m).map(|r| r.prob_one)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = pairwise_sum(&per_trajectory) / per_trajectory.len() as f64;
    let mut result = PredictionResult::from_prob(mean);
    result.per_trajectory = Some(per_trajectory);
    Ok(result)
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::validation("control register needs d >= 1"));
    }
    Ok(())
}

/// Summation with O(log n) error growth, independent of thread scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (l, r) = values.split_at(values.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{Label, LabeledPoint};

    #[test]
    fn default_plan_reads_expected_points() {
        let p = SwapPlan::default_plan(1, 2).unwrap();
        assert_eq!(
            (0..2).map(|b| p.active_point(b)).collect::<Vec<_>>(),
            [0, 1]
        );
        let p = SwapPlan::default_plan(2, 4).unwrap();
        assert_eq!(
            (0..4).map(|b| p.active_point(b)).collect::<Vec<_>>(),
            [0, 1, 2, 3]
        );
        let p = SwapPlan::default_plan(3, 4).unwrap();
        assert_eq!(
            (0..8).map(|b| p.active_point(b)).collect::<Vec<_>>(),
            [0, 1, 2, 3, 0, 1, 2, 3]
        );
    }

    #[test]
    fn default_plan_cycles_for_any_size() {
        for n in 1..=9 {
            for d in 1..=5 {
                let p = SwapPlan::default_plan(d, n).unwrap();
                for b in 0..1 << d {
                    assert_eq!(p.active_point(b), b % n, "d={d} n={n} b={b}");
                }
            }
        }
    }

    #[test]
    fn xor_steps_are_disjoint_swaps() {
        let p = SwapPlan::default_plan(2, 4).unwrap();
        for step in p.steps() {
            assert!(step.first.is_identity_sequence());
            let mut touched: Vec<usize> = step
                .second
                .swaps()
                .iter()
                .flat_map(|&(a, b)| [a, b])
                .collect();
            let len = touched.len();
            touched.sort_unstable();
            touched.dedup();
            assert_eq!(touched.len(), len);
        }
    }

    #[test]
    fn plan_rejects_foreign_positions() {
        let bad = SwapStep {
            first: PositionPermutation::from_swaps(vec![(0, 4)]),
            second: Default::default(),
        };
        assert!(matches!(
            SwapPlan::new(4, vec![bad]),
            Err(Error::Validation(_))
        ));
        let bad = SwapStep {
            first: PositionPermutation::from_swaps(vec![(1, 1)]),
            second: Default::default(),
        };
        assert!(SwapPlan::new(4, vec![bad]).is_err());
    }

    #[test]
    fn random_plan_is_seeded() {
        assert_eq!(
            SwapPlan::random(3, 5, 9).unwrap(),
            SwapPlan::random(3, 5, 9).unwrap()
        );
        assert_ne!(
            SwapPlan::random(3, 5, 9).unwrap(),
            SwapPlan::random(3, 5, 10).unwrap()
        );
        SwapPlan::random(2, 1, 0).unwrap();
    }

    #[test]
    fn from_arrangement_realizes_target() {
        let target = [2, 0, 3, 1];
        let perm = PositionPermutation::from_arrangement(&target).unwrap();
        let mut arr = vec![0, 1, 2, 3];
        perm.apply(&mut arr);
        assert_eq!(arr, target);
        assert!(PositionPermutation::from_arrangement(&[0, 0]).is_err());
    }

    #[test]
    fn sampling_stage_shape() {
        let plan = SwapPlan::default_plan(2, 4).unwrap();
        let layout = RegisterLayout::standard(2, 4);
        let c = build_sampling_stage(&plan, &layout).unwrap();
        // 2 H, 2 X, and per step the xor layer of 2 swaps, each as feature + label cswap
        assert_eq!(c.len(), 2 + 2 + 2 * 2 * 2);
        let wrong = RegisterLayout::standard(3, 4);
        assert!(build_sampling_stage(&plan, &wrong).is_err());
    }

    #[test]
    fn full_mode_capacity_error_names_qubits() {
        let pts: Vec<LabeledPoint> = (0..12)
            .map(|i| LabeledPoint::new(1.0, i as f64, Label::Zero))
            .collect();
        let ds = LabeledDataset::new(pts).unwrap();
        let cfg = EnsembleConfig::new(3, EnsembleMode::FullCircuit);
        match run_ensemble_full(&ds, &FeatureVector2D::new(1.0, 1.0), &cfg) {
            Err(Error::Capacity { required, limit }) => assert_eq!((required, limit), (29, 26)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-10);
    }
}
