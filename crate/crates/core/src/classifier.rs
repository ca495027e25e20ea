//! Swap-test cosine classifier.
//!
//! The prediction qubit is the swap-test ancilla: after `H`, a controlled swap of the
//! training and test qubits, and `H`, it reads 0 with probability `1/2 + cos^2/2`.
//! A CNOT from the training label then flips it when the training point is class 1,
//! so the qubit reads 1 with probability `1/2 - cos^2/2` (label 0) or `1/2 + cos^2/2`
//! (label 1).

use serde::{Deserialize, Serialize};

use crate::encoding::{encode_gate, FeatureVector2D, Label};
use crate::error::{Error, Result};
use crate::qsim::{Circuit, GateOp, StateVector};

/// Block name under which the classifier appears in emitted circuits.
pub const CLASSIFIER_BLOCK: &str = "cosine_classifier";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosineClassifierSpec {
    pub train_qubit: usize,
    pub label_qubit: usize,
    pub test_qubit: usize,
    pub prediction_qubit: usize,
}

impl CosineClassifierSpec {
    /// Layout used by the standalone classifier: train, label, test, prediction.
    pub const STANDALONE: Self = Self {
        train_qubit: 0,
        label_qubit: 1,
        test_qubit: 2,
        prediction_qubit: 3,
    };

    pub fn validate(&self) -> Result<()> {
        let q = [
            self.train_qubit,
            self.label_qubit,
            self.test_qubit,
            self.prediction_qubit,
        ];
        for i in 0..q.len() {
            if q[i + 1..].contains(&q[i]) {
                return Err(Error::validation(format!(
                    "classifier qubit {} used twice",
                    q[i]
                )));
            }
        }
        Ok(())
    }
}

/// How the prediction qubit is read out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Measurement {
    /// Probability read analytically from the amplitudes.
    #[default]
    Exact,
    /// Estimated from `shots` seeded Bernoulli draws.
    Shots { shots: u64, seed: u64 },
}

impl Measurement {
    pub fn read(&self, state: &StateVector, qubit: usize) -> Result<f64> {
        match *self {
            Measurement::Exact => state.prob_one(qubit),
            Measurement::Shots { shots, seed } => {
                Ok(state.sample_shots(qubit, shots, seed)?.estimated_prob_one)
            }
        }
    }

    /// Same kind with a different seed (no-op in exact mode).
    pub fn reseeded(&self, seed: u64) -> Self {
        match *self {
            Measurement::Exact => Measurement::Exact,
            Measurement::Shots { shots, .. } => Measurement::Shots { shots, seed },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    /// Estimated `Pr(y_test = 1)`.
    pub prob_one: f64,
    pub decision: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trajectory: Option<Vec<f64>>,
}

impl PredictionResult {
    /// Class 1 only when strictly more likely; an exact tie goes to class 0.
    pub fn from_prob(prob_one: f64) -> Self {
        Self {
            prob_one,
            decision: decide(prob_one),
            per_trajectory: None,
        }
    }
}

/// Probabilities within this distance of 1/2 count as a tie (rounding in the simulator).
pub const TIE_TOLERANCE: f64 = 1e-12;

pub fn decide(prob_one: f64) -> Label {
    Label::from(prob_one > 0.5 + TIE_TOLERANCE)
}

pub fn build_cosine_classifier(spec: &CosineClassifierSpec, num_qubits: usize) -> Result<Circuit> {
    spec.validate()?;
    let mut inner = Circuit::new(num_qubits);
    inner
        .push(GateOp::h(spec.prediction_qubit))?
        .push(GateOp::cswap(
            spec.prediction_qubit,
            spec.train_qubit,
            spec.test_qubit,
        ))?
        .push(GateOp::h(spec.prediction_qubit))?
        .push(GateOp::cx(spec.label_qubit, spec.prediction_qubit))?;
    let mut circuit = Circuit::new(num_qubits);
    circuit.append_block(CLASSIFIER_BLOCK, &inner)?;
    Ok(circuit)
}

/// Full 4-qubit circuit: encode one training point, its label and the test vector, then classify.
pub fn single_classifier_circuit(
    train: &FeatureVector2D,
    label: Label,
    test: &FeatureVector2D,
) -> Result<Circuit> {
    let spec = CosineClassifierSpec::STANDALONE;
    let mut circuit = Circuit::new(4);
    circuit.push(encode_gate(spec.train_qubit, train)?)?;
    if label.bit() {
        circuit.push(GateOp::x(spec.label_qubit))?;
    }
    circuit.push(encode_gate(spec.test_qubit, test)?)?;
    circuit.append(&build_cosine_classifier(&spec, 4)?)?;
    Ok(circuit)
}

pub fn classify_single(
    train: &FeatureVector2D,
    label: Label,
    test: &FeatureVector2D,
    measurement: Measurement,
) -> Result<PredictionResult> {
    let circuit = single_classifier_circuit(train, label, test)?;
    let mut state = StateVector::zero(4)?;
    state.run(&circuit)?;
    let p = measurement.read(&state, CosineClassifierSpec::STANDALONE.prediction_qubit)?;
    Ok(PredictionResult::from_prob(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x1: f64, x2: f64) -> FeatureVector2D {
        FeatureVector2D::new(x1, x2)
    }

    fn exact(train: (f64, f64), label: Label, test: (f64, f64)) -> f64 {
        classify_single(
            &v(train.0, train.1),
            label,
            &v(test.0, test.1),
            Measurement::Exact,
        )
        .unwrap()
        .prob_one
    }

    #[test]
    fn gate_sequence() {
        let c = build_cosine_classifier(&CosineClassifierSpec::STANDALONE, 4).unwrap();
        let ops = c.ops();
        assert_eq!(ops.len(), 4);
        assert_eq!(ops[0], GateOp::h(3));
        assert_eq!(ops[1], GateOp::cswap(3, 0, 2));
        assert_eq!(ops[2], GateOp::h(3));
        assert_eq!(ops[3], GateOp::cx(1, 3));
        assert_eq!(c.count_blocks(CLASSIFIER_BLOCK), 1);
    }

    #[test]
    fn duplicate_indices_rejected() {
        let spec = CosineClassifierSpec {
            train_qubit: 0,
            label_qubit: 1,
            test_qubit: 0,
            prediction_qubit: 3,
        };
        assert!(matches!(
            build_cosine_classifier(&spec, 4),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn identical_and_orthogonal() {
        assert!(exact((1.0, 0.0), Label::Zero, (1.0, 0.0)).abs() < 1e-12);
        assert!((exact((1.0, 0.0), Label::Zero, (0.0, 1.0)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn toy_rows() {
        let t = (2.0, 2.0);
        assert!((exact((1.0, 3.0), Label::Zero, t) - 0.10).abs() < 1e-9);
        assert!((exact((-2.0, 2.0), Label::One, t) - 0.50).abs() < 1e-9);
        assert!((exact((3.0, 0.0), Label::Zero, t) - 0.25).abs() < 1e-9);
        assert!((exact((3.0, 1.0), Label::One, t) - 0.90).abs() < 1e-9);
    }

    #[test]
    fn tie_goes_to_zero() {
        assert_eq!(decide(0.5), Label::Zero);
        assert_eq!(decide(0.5 + 1e-13), Label::Zero);
        assert_eq!(decide(0.5 + 1e-9), Label::One);
        let r =
            classify_single(&v(-2.0, 2.0), Label::One, &v(2.0, 2.0), Measurement::Exact).unwrap();
        assert_eq!(r.decision, Label::Zero);
    }

    #[test]
    fn zero_vector_is_encoding_error() {
        let r = classify_single(&v(0.0, 0.0), Label::Zero, &v(1.0, 1.0), Measurement::Exact);
        assert!(matches!(r, Err(Error::ZeroVector)));
    }

    #[test]
    fn shots_mode_is_seeded() {
        let m = Measurement::Shots {
            shots: 4096,
            seed: 5,
        };
        let a = classify_single(&v(3.0, 1.0), Label::One, &v(2.0, 2.0), m).unwrap();
        let b = classify_single(&v(3.0, 1.0), Label::One, &v(2.0, 2.0), m).unwrap();
        assert_eq!(a, b);
        assert!((a.prob_one - 0.9).abs() < 0.03);
    }
}
