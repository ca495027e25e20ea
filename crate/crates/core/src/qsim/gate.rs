use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Matrix4 = [[Complex64; 4]; 4];

/// Maximum deviation of `U^dagger U` from the identity accepted for a gate matrix.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The operation applied to the target qubits once the control condition holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    /// 2x2 unitary acting on one target.
    Single(Matrix2),
    /// 4x4 unitary acting on two targets. Row/column index is
    /// `bit(targets[0]) | bit(targets[1]) << 1`.
    Two(Matrix4),
    /// Exchange of two target qubits.
    Swap,
}

/// A control condition: the gate fires only on basis states where `qubit` reads `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Control {
    pub qubit: usize,
    pub value: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub gate: Gate,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
}

impl GateOp {
    pub fn single(target: usize, matrix: Matrix2) -> Self {
        Self {
            gate: Gate::Single(matrix),
            targets: vec![target],
            controls: Vec::new(),
        }
    }

    pub fn two(first: usize, second: usize, matrix: Matrix4) -> Self {
        Self {
            gate: Gate::Two(matrix),
            targets: vec![first, second],
            controls: Vec::new(),
        }
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self {
            gate: Gate::Swap,
            targets: vec![a, b],
            controls: Vec::new(),
        }
    }

    pub fn h(target: usize) -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::single(target, [[s, s], [s, -s]])
    }

    pub fn x(target: usize) -> Self {
        Self::single(target, [[ZERO, ONE], [ONE, ZERO]])
    }

    /// Real-plane rotation `Ry(theta)`: `|0>` goes to `cos(theta/2)|0> + sin(theta/2)|1>`.
    pub fn ry(target: usize, theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        let c = Complex64::new(c, 0.0);
        let s = Complex64::new(s, 0.0);
        Self::single(target, [[c, -s], [s, c]])
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::x(target).controlled_by(control, true)
    }

    /// Fredkin gate.
    pub fn cswap(control: usize, a: usize, b: usize) -> Self {
        Self::swap(a, b).controlled_by(control, true)
    }

    /// Adds a control condition.
    pub fn controlled_by(mut self, qubit: usize, value: bool) -> Self {
        self.controls.push(Control { qubit, value });
        self
    }

    /// Every qubit the operation touches, targets first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets
            .iter()
            .copied()
            .chain(self.controls.iter().map(|c| c.qubit))
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let expected_targets = match self.gate {
            Gate::Single(_) => 1,
            Gate::Two(_) | Gate::Swap => 2,
        };
        if self.targets.len() != expected_targets {
            return Err(Error::InvalidGate(format!(
                "{} expects {expected_targets} target(s), got {}",
                self.name(),
                self.targets.len()
            )));
        }
        let mut seen = 0u64;
        for q in self.qubits() {
            if q >= num_qubits {
                return Err(Error::QubitIndex {
                    index: q,
                    num_qubits,
                });
            }
            if seen & (1 << q) != 0 {
                return Err(Error::InvalidGate(format!(
                    "{}: qubit {q} used more than once",
                    self.name()
                )));
            }
            seen |= 1 << q;
        }
        let deviation = match &self.gate {
            Gate::Single(m) => unitarity_deviation(m),
            Gate::Two(m) => unitarity_deviation(m),
            Gate::Swap => 0.0,
        };
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::InvalidGate(format!(
                "{}: matrix is not unitary (max |U^dagger U - I| = {deviation:e})",
                self.name()
            )));
        }
        Ok(())
    }

    fn name(&self) -> &'static str {
        match (&self.gate, self.controls.is_empty()) {
            (Gate::Single(_), true) => "single-qubit unitary",
            (Gate::Single(_), false) => "controlled unitary",
            (Gate::Two(_), true) => "two-qubit unitary",
            (Gate::Two(_), false) => "controlled two-qubit unitary",
            (Gate::Swap, true) => "swap",
            (Gate::Swap, false) => "controlled-swap",
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {:?}", self.name(), self.targets)?;
        if !self.controls.is_empty() {
            let ctrl: Vec<String> = self
                .controls
                .iter()
                .map(|c| format!("q{}={}", c.qubit, u8::from(c.value)))
                .collect();
            write!(f, " if {}", ctrl.join(","))?;
        }
        Ok(())
    }
}

fn unitarity_deviation<const N: usize>(m: &[[Complex64; N]; N]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            let acc: Complex64 = m.iter().map(|row| row[i].conj() * row[j]).sum();
            let expected = if i == j { ONE } else { ZERO };
            worst = worst.max((acc - expected).norm());
        }
    }
    worst
}
