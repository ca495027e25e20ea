use num_complex::Complex64;
use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::circuit::Circuit;
use super::gate::{Control, Gate, GateOp, Matrix2, Matrix4};
use crate::error::{Error, Result};

/// Largest register the simulator will allocate (2^26 amplitudes, 1 GiB).
pub const MAX_QUBITS: usize = 26;

/// Accepted drift of the squared norm away from 1.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Dense statevector. Qubit `q` is bit `q` of the basis-state index (qubit 0 is the
/// least-significant bit).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_capacity(num_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the norm 1.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::validation(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_capacity(num_qubits)?;
        let state = Self {
            num_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::validation(format!(
                "state is not normalized (norm^2 = {norm})"
            )));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Applies one gate in place.
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.num_qubits)?;
        let (mask, value) = control_mask(&op.controls);
        match &op.gate {
            Gate::Single(m) => apply_single(&mut self.amplitudes, op.targets[0], m, mask, value),
            Gate::Two(m) => apply_two(
                &mut self.amplitudes,
                op.targets[0],
                op.targets[1],
                m,
                mask,
                value,
            ),
            Gate::Swap => apply_swap(
                &mut self.amplitudes,
                op.targets[0],
                op.targets[1],
                mask,
                value,
            ),
        }
        Ok(())
    }

    /// Applies every operation of `circuit` in order.
    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() > self.num_qubits {
            return Err(Error::validation(format!(
                "circuit needs {} qubits, state has {}",
                circuit.num_qubits(),
                self.num_qubits
            )));
        }
        circuit.ops().iter().try_for_each(|op| self.apply(op))
    }

    /// Probability of reading 1 on `qubit`.
    pub fn prob_one(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Draws `shots` independent single-qubit measurement outcomes of `qubit`.
    /// The state is not collapsed; every shot sees the same distribution.
    pub fn sample_shots(&self, qubit: usize, shots: u64, seed: u64) -> Result<ShotResult> {
        if shots == 0 {
            return Err(Error::validation("shots must be positive"));
        }
        let p = self.prob_one(qubit)?.clamp(0.0, 1.0);
        sample_bernoulli(p, shots, seed)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }
}

/// Outcome counts of a repeated single-qubit measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotResult {
    pub shots: u64,
    pub zeros: u64,
    pub ones: u64,
    pub estimated_prob_one: f64,
}

impl ShotResult {
    pub fn count(&self, bit: bool) -> u64 {
        if bit {
            self.ones
        } else {
            self.zeros
        }
    }
}

/// Seeded Bernoulli sampling.
fn sample_bernoulli(p: f64, shots: u64, seed: u64) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::validation("shots must be positive"));
    }
    let dist = Bernoulli::new(p).map_err(|e| Error::validation(format!("probability {p}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ones = (0..shots).filter(|_| dist.sample(&mut rng)).count() as u64;
    Ok(ShotResult {
        shots,
        zeros: shots - ones,
        ones,
        estimated_prob_one: ones as f64 / shots as f64,
    })
}

fn check_capacity(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::Capacity {
            required: num_qubits,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

fn control_mask(controls: &[Control]) -> (usize, usize) {
    controls.iter().fold((0, 0), |(mask, value), c| {
        let bit = 1usize << c.qubit;
        (mask | bit, if c.value { value | bit } else { value })
    })
}

/// Spreads `k` so that bit position `pos` is a zero.
#[inline]
fn insert_zero_bit(k: usize, pos: usize) -> usize {
    let low = k & ((1 << pos) - 1);
    ((k >> pos) << (pos + 1)) | low
}

fn apply_single(amps: &mut [Complex64], target: usize, m: &Matrix2, mask: usize, value: usize) {
    let bit = 1usize << target;
    for k in 0..amps.len() / 2 {
        let i0 = insert_zero_bit(k, target);
        if i0 & mask != value {
            continue;
        }
        let i1 = i0 | bit;
        let (a0, a1) = (amps[i0], amps[i1]);
        amps[i0] = m[0][0] * a0 + m[0][1] * a1;
        amps[i1] = m[1][0] * a0 + m[1][1] * a1;
    }
}

fn apply_two(amps: &mut [Complex64], t0: usize, t1: usize, m: &Matrix4, mask: usize, value: usize) {
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    let (b0, b1) = (1usize << t0, 1usize << t1);
    for k in 0..amps.len() / 4 {
        let base = insert_zero_bit(insert_zero_bit(k, lo), hi);
        if base & mask != value {
            continue;
        }
        let idx = [base, base | b0, base | b1, base | b0 | b1];
        let a = idx.map(|i| amps[i]);
        for (row, &i) in idx.iter().enumerate() {
            amps[i] = (0..4).map(|col| m[row][col] * a[col]).sum();
        }
    }
}

fn apply_swap(amps: &mut [Complex64], a: usize, b: usize, mask: usize, value: usize) {
    let (lo, hi) = (a.min(b), a.max(b));
    let (bit_lo, bit_hi) = (1usize << lo, 1usize << hi);
    for k in 0..amps.len() / 4 {
        let base = insert_zero_bit(insert_zero_bit(k, lo), hi);
        if base & mask != value {
            continue;
        }
        amps.swap(base | bit_lo, base | bit_hi);
    }
}
