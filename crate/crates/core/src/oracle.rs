//! Classical ground truth used to check the simulator and the ensemble.
//!
//! Dense operators are assembled from Kronecker products of 2x2 factors (projectors,
//! Paulis, the gate matrix itself). A swap is expanded as `(I + XX + YY + ZZ) / 2`, so
//! nothing here shares code with the in-place amplitude kernels.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoding::{FeatureVector2D, Label, LabeledDataset};
use crate::ensemble::{PositionPermutation, SwapPlan};
use crate::error::{Error, Result};
use crate::qsim::{Circuit, Gate, GateOp, Matrix2, StateVector};

/// Widest register for which dense `2^n x 2^n` operators are built.
pub const MAX_DENSE_QUBITS: usize = 14;

type CMat = DMatrix<Complex64>;

pub fn cosine_similarity(a: &FeatureVector2D, b: &FeatureVector2D) -> Result<f64> {
    a.check_encodable()?;
    b.check_encodable()?;
    Ok(a.dot(b) / (a.norm() * b.norm()))
}

/// `Pr(y_test = 1)` of the cosine rule: `p = 1/2 + cos^2/2` is the probability that the
/// test point shares the training label.
pub fn prob_class1(train: &FeatureVector2D, label: Label, test: &FeatureVector2D) -> Result<f64> {
    let c = cosine_similarity(train, test)?;
    let same = 0.5 + c * c / 2.0;
    Ok(match label {
        Label::One => same,
        Label::Zero => 1.0 - same,
    })
}

/// Mean of the single-point classifiers over `selection` (repeats allowed).
pub fn classical_bagging(
    dataset: &LabeledDataset,
    test: &FeatureVector2D,
    selection: &[usize],
) -> Result<f64> {
    if selection.is_empty() {
        return Err(Error::validation("empty selection"));
    }
    let mut sum = 0.0;
    for &i in selection {
        let p = dataset.points().get(i).ok_or_else(|| {
            Error::validation(format!(
                "index {i} out of range for {} points",
                dataset.len()
            ))
        })?;
        sum += prob_class1(&p.features, p.label, test)?;
    }
    Ok(sum / selection.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleErrorParams {
    pub e_model: f64,
    pub rho: f64,
    pub b: u64,
}

impl EnsembleErrorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_model.is_finite() && self.e_model >= 0.0) {
            return Err(Error::validation(format!(
                "model error must be >= 0, got {}",
                self.e_model
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::validation(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        if self.b == 0 {
            return Err(Error::validation("ensemble size must be >= 1"));
        }
        Ok(())
    }
}

/// Expected error of an average of `b` models with pairwise error correlation `rho`:
/// `(1 + rho (b - 1)) / b * e_model`.
pub fn ensemble_error(p: &EnsembleErrorParams) -> Result<f64> {
    p.validate()?;
    let b = p.b as f64;
    Ok((1.0 + p.rho * (b - 1.0)) / b * p.e_model)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn identity2() -> CMat {
    CMat::identity(2, 2)
}

fn mat2(m: &Matrix2) -> CMat {
    CMat::from_fn(2, 2, |r, col| m[r][col])
}

fn projector(value: bool) -> CMat {
    let mut m = CMat::zeros(2, 2);
    let i = usize::from(value);
    m[(i, i)] = c(1.0);
    m
}

fn paulis() -> [CMat; 4] {
    let i = Complex64::i();
    [
        identity2(),
        CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        CMat::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]),
        CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
    ]
}

/// Kronecker product over all qubits, qubit `n - 1` as the leftmost factor.
/// `factor(q)` returns `None` for the identity.
fn kron_qubits(n: usize, mut factor: impl FnMut(usize) -> Option<CMat>) -> CMat {
    let mut acc = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let f = factor(q).unwrap_or_else(identity2);
        acc = acc.kronecker(&f);
    }
    acc
}

fn check_dense_capacity(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return Err(Error::Capacity {
            required: n,
            limit: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Full-register matrix of one gate.
pub fn dense_gate_matrix(op: &GateOp, n: usize) -> Result<CMat> {
    check_dense_capacity(n)?;
    op.validate(n)?;
    let control_factor = |q: usize| {
        op.controls
            .iter()
            .find(|ct| ct.qubit == q)
            .map(|ct| projector(ct.value))
    };

    // Controlled action restricted to the control subspace.
    let active = match &op.gate {
        Gate::Single(m) => {
            let t = op.targets[0];
            kron_qubits(n, |q| {
                if q == t {
                    Some(mat2(m))
                } else {
                    control_factor(q)
                }
            })
        }
        Gate::Swap => {
            let (a, b) = (op.targets[0], op.targets[1]);
            let mut sum = CMat::zeros(1 << n, 1 << n);
            for p in paulis() {
                sum += kron_qubits(n, |q| {
                    if q == a || q == b {
                        Some(p.clone())
                    } else {
                        control_factor(q)
                    }
                });
            }
            sum * c(0.5)
        }
        Gate::Two(m) => {
            let (t0, t1) = (op.targets[0], op.targets[1]);
            let full = CMat::from_fn(4, 4, |r, col| m[r][col]);
            let basis = paulis();
            let mut sum = CMat::zeros(1 << n, 1 << n);
            for hi in &basis {
                for lo in &basis {
                    let coeff = (hi.kronecker(lo).adjoint() * &full).trace() / c(4.0);
                    if coeff.norm() == 0.0 {
                        continue;
                    }
                    sum += kron_qubits(n, |q| {
                        if q == t1 {
                            Some(hi.clone())
                        } else if q == t0 {
                            Some(lo.clone())
                        } else {
                            control_factor(q)
                        }
                    }) * coeff;
                }
            }
            sum
        }
    };
    if op.controls.is_empty() {
        return Ok(active);
    }
    let control_projector = kron_qubits(n, control_factor);
    Ok(CMat::identity(1 << n, 1 << n) - control_projector + active)
}

/// Product of every gate matrix of `circuit` (later gates on the left).
pub fn dense_circuit_matrix(circuit: &Circuit) -> Result<CMat> {
    let n = circuit.num_qubits();
    check_dense_capacity(n)?;
    let mut acc = CMat::identity(1 << n, 1 << n);
    for op in circuit.ops() {
        acc = dense_gate_matrix(op, n)? * acc;
    }
    Ok(acc)
}

/// Applies `circuit` to `state` one dense gate matrix at a time.
pub fn dense_apply(circuit: &Circuit, state: &StateVector) -> Result<StateVector> {
    let n = state.num_qubits();
    check_dense_capacity(n)?;
    if circuit.num_qubits() != n {
        return Err(Error::validation("circuit and state widths differ"));
    }
    let mut v = nalgebra::DVector::from_column_slice(state.amplitudes());
    for op in circuit.ops() {
        v = dense_gate_matrix(op, n)? * v;
    }
    StateVector::from_amplitudes(v.as_slice().to_vec())
}

/// Dense matrix of a position permutation on the data register: `n_positions` feature
/// qubits (`0..n`) followed by `n_positions` label qubits (`n..2n`).
///
/// The same swaps act on both halves, so the result is `P (x) P` with `P` the product of
/// the swap matrices on `n_positions` qubits.
pub fn dense_permutation_matrix(perm: &PositionPermutation, n_positions: usize) -> Result<CMat> {
    check_dense_capacity(2 * n_positions)?;
    let mut half = CMat::identity(1 << n_positions, 1 << n_positions);
    for &(p, q) in perm.swaps() {
        half = dense_gate_matrix(&GateOp::swap(p, q), n_positions)? * half;
    }
    Ok(half.kronecker(&half))
}

fn check_plan_state(plan: &SwapPlan, data: &StateVector) -> Result<usize> {
    if data.num_qubits() != 2 * plan.n_positions() {
        return Err(Error::validation(format!(
            "data state has {} qubits, plan needs {}",
            data.num_qubits(),
            2 * plan.n_positions()
        )));
    }
    let n = plan.d() + data.num_qubits();
    check_dense_capacity(n)?;
    Ok(n)
}

/// Sampling-stage output built gate by gate from dense operators: Walsh-Hadamard on the
/// control register, then per step `CU(i,1)`, `X` on the control qubit, `CU(i,2)`.
///
/// Control qubits occupy `0..d` of the result and the data register the qubits above,
/// matching [`crate::encoding::RegisterLayout::standard`] with test and prediction dropped.
pub fn brute_force_state(plan: &SwapPlan, initial_data_state: &StateVector) -> Result<StateVector> {
    check_plan_state(plan, initial_data_state)?;
    let d = plan.d();
    let data_dim = initial_data_state.amplitudes().len();
    let data_identity = CMat::identity(data_dim, data_dim);

    // Column k holds the control amplitudes of data basis state k.
    let mut v = CMat::zeros(1 << d, data_dim);
    for (k, a) in initial_data_state.amplitudes().iter().enumerate() {
        v[(0, k)] = *a;
    }

    let h = mat2(&hadamard());
    v = kron_apply(&data_identity, &kron_qubits(d, |_| Some(h.clone())), &v);

    for (i, step) in plan.steps().iter().enumerate() {
        let p0 = kron_qubits(d, |q| (q == i).then(|| projector(false)));
        let p1 = kron_qubits(d, |q| (q == i).then(|| projector(true)));
        let controlled = |perm: &PositionPermutation, v: &CMat| -> Result<CMat> {
            let u = dense_permutation_matrix(perm, plan.n_positions())?;
            Ok(kron_apply(&data_identity, &p0, v) + kron_apply(&u, &p1, v))
        };
        let flip = kron_qubits(d, |q| (q == i).then(|| paulis()[1].clone()));
        v = controlled(&step.first, &v)?;
        v = kron_apply(&data_identity, &flip, &v);
        v = controlled(&step.second, &v)?;
    }
    StateVector::from_amplitudes(v.as_slice().to_vec())
}

/// `(a (x) b) vec(v)` without forming the Kronecker product: `vec(b v a^T)`, where the
/// column-major `v` stores the `b`-side index fastest.
fn kron_apply(a: &CMat, b: &CMat, v: &CMat) -> CMat {
    b * v * a.transpose()
}

/// The closed form `2^(-d/2) sum_b |b> V_b |x,y>`, where `V_b` applies the dense matrix of
/// `U(i, bit_(i-1)(b) + 1)` for `i = 1..d` in turn.
pub fn closed_form_state(plan: &SwapPlan, initial_data_state: &StateVector) -> Result<StateVector> {
    let n = check_plan_state(plan, initial_data_state)?;
    let d = plan.d();
    let data = nalgebra::DVector::from_column_slice(initial_data_state.amplitudes());
    let weight = c((plan.trajectory_count() as f64).sqrt().recip());
    let factors = plan
        .steps()
        .iter()
        .map(|s| {
            Ok([
                dense_permutation_matrix(&s.first, plan.n_positions())?,
                dense_permutation_matrix(&s.second, plan.n_positions())?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![c(0.0); 1 << n];
    for b in 0..plan.trajectory_count() {
        let mut branch = data.clone();
        for (i, pair) in factors.iter().enumerate() {
            branch = &pair[b >> i & 1] * branch;
        }
        for (k, a) in branch.iter().enumerate() {
            out[(k << d) | b] += weight * a;
        }
    }
    StateVector::from_amplitudes(out)
}

fn hadamard() -> Matrix2 {
    let s = c(std::f64::consts::FRAC_1_SQRT_2);
    [[s, s], [s, -s]]
}
