//! Qubit encoding of 2-D feature vectors and binary labels.
//!
//! A vector `(x1, x2)` is stored in the two real amplitudes of one qubit,
//! `(x1, x2) / ||(x1, x2)||`, prepared from `|0>` by `Ry(2 * atan2(x2, x1))`.
//! Negative components map to negative amplitudes. A label of 1 is an X flip.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{Circuit, GateOp};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector2D {
    pub x1: f64,
    pub x2: f64,
}

impl FeatureVector2D {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.x1 * factor, self.x2 * factor)
    }

    /// Fails for zero or non-finite vectors.
    pub fn check_encodable(&self) -> Result<()> {
        if !self.x1.is_finite() || !self.x2.is_finite() {
            return Err(Error::validation(format!(
                "non-finite feature vector {self}"
            )));
        }
        if self.x1 == 0.0 && self.x2 == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(())
    }

    /// Polar angle in `(-pi, pi]`.
    pub fn angle(&self) -> Result<f64> {
        self.check_encodable()?;
        Ok(self.x2.atan2(self.x1))
    }
}

impl fmt::Display for FeatureVector2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// Parses `"x1,x2"`.
impl FromStr for FeatureVector2D {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::validation(format!(
                "expected two comma-separated components, got {s:?}"
            )));
        }
        let parse = |p: &str| {
            p.parse::<f64>()
                .map_err(|e| Error::validation(format!("bad component {p:?}: {e}")))
        };
        Ok(Self::new(parse(parts[0])?, parse(parts[1])?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Zero,
    One,
}

impl Label {
    pub fn bit(self) -> bool {
        matches!(self, Label::One)
    }

    pub fn as_f64(self) -> f64 {
        if self.bit() {
            1.0
        } else {
            0.0
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Zero => Label::One,
            Label::One => Label::Zero,
        }
    }
}

impl From<bool> for Label {
    fn from(b: bool) -> Self {
        if b {
            Label::One
        } else {
            Label::Zero
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        u8::from(l.bit())
    }
}

impl TryFrom<u8> for Label {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label::Zero),
            1 => Ok(Label::One),
            other => Err(Error::validation(format!(
                "label must be 0 or 1, got {other}"
            ))),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(Label::Zero),
            "1" => Ok(Label::One),
            other => Err(Error::validation(format!(
                "label must be 0 or 1, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub features: FeatureVector2D,
    pub label: Label,
}

impl LabeledPoint {
    pub fn new(x1: f64, x2: f64, label: Label) -> Self {
        Self {
            features: FeatureVector2D::new(x1, x2),
            label,
        }
    }
}

/// Non-empty ordered training set whose every vector is encodable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LabeledPoint>", into = "Vec<LabeledPoint>")]
pub struct LabeledDataset {
    points: Vec<LabeledPoint>,
}

impl LabeledDataset {
    pub fn new(points: Vec<LabeledPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::validation("dataset is empty"));
        }
        for p in &points {
            p.features.check_encodable()?;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points at `indices`, in that order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let points = indices
            .iter()
            .map(|&i| {
                self.points.get(i).copied().ok_or_else(|| {
                    Error::validation(format!(
                        "index {i} out of range for {} points",
                        self.points.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    /// The four-point toy training set and its test vector `(2, 2)`.
    pub fn toy() -> (Self, FeatureVector2D) {
        let points = vec![
            LabeledPoint::new(1.0, 3.0, Label::Zero),
            LabeledPoint::new(-2.0, 2.0, Label::One),
            LabeledPoint::new(3.0, 0.0, Label::Zero),
            LabeledPoint::new(3.0, 1.0, Label::One),
        ];
        (Self { points }, FeatureVector2D::new(2.0, 2.0))
    }
}

impl TryFrom<Vec<LabeledPoint>> for LabeledDataset {
    type Error = Error;

    fn try_from(points: Vec<LabeledPoint>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<LabeledDataset> for Vec<LabeledPoint> {
    fn from(d: LabeledDataset) -> Self {
        d.points
    }
}

/// Amplitudes of a single encoded qubit, `amp0^2 + amp1^2 = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitAmplitudes {
    pub amp0: f64,
    pub amp1: f64,
}

pub fn encode_vector(v: &FeatureVector2D) -> Result<QubitAmplitudes> {
    v.check_encodable()?;
    let n = v.norm();
    Ok(QubitAmplitudes {
        amp0: v.x1 / n,
        amp1: v.x2 / n,
    })
}

/// `Ry` gate taking `|0>` to the encoding of `v`.
pub fn encode_gate(qubit: usize, v: &FeatureVector2D) -> Result<GateOp> {
    Ok(GateOp::ry(qubit, 2.0 * v.angle()?))
}

/// Qubit assignment for the ensemble circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub control: Vec<usize>,
    pub feature: Vec<usize>,
    pub label: Vec<usize>,
    pub test: usize,
    pub prediction: usize,
}

impl RegisterLayout {
    /// Control qubits first (`0..d`), then features, labels, test, prediction.
    pub fn standard(d: usize, n_points: usize) -> Self {
        let feature_start = d;
        let label_start = d + n_points;
        Self {
            control: (0..d).collect(),
            feature: (feature_start..label_start).collect(),
            label: (label_start..label_start + n_points).collect(),
            test: d + 2 * n_points,
            prediction: d + 2 * n_points + 1,
        }
    }

    pub fn d(&self) -> usize {
        self.control.len()
    }

    pub fn n_points(&self) -> usize {
        self.feature.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.control.len() + self.feature.len() + self.label.len() + 2
    }

    /// Required qubits for `d` control qubits and `n_points` training points.
    pub fn required_qubits(d: usize, n_points: usize) -> usize {
        d + 2 * n_points + 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature.len() != self.label.len() {
            return Err(Error::validation(format!(
                "layout has {} feature qubits but {} label qubits",
                self.feature.len(),
                self.label.len()
            )));
        }
        let all: Vec<usize> = self
            .control
            .iter()
            .chain(&self.feature)
            .chain(&self.label)
            .copied()
            .chain([self.test, self.prediction])
            .collect();
        let total = all.len();
        for (i, q) in all.iter().enumerate() {
            if *q >= total {
                return Err(Error::QubitIndex {
                    index: *q,
                    num_qubits: total,
                });
            }
            if all[..i].contains(q) {
                return Err(Error::validation(format!(
                    "qubit {q} assigned to two registers"
                )));
            }
        }
        Ok(())
    }
}

/// Encodes the training points, their labels and the test vector. The prediction
/// qubit and the control register are left untouched.
pub fn build_state_prep(
    dataset: &LabeledDataset,
    test: &FeatureVector2D,
    layout: &RegisterLayout,
) -> Result<Circuit> {
    layout.validate()?;
    if layout.n_points() != dataset.len() {
        return Err(Error::validation(format!(
            "layout holds {} points but dataset has {}",
            layout.n_points(),
            dataset.len()
        )));
    }
    let mut circuit = Circuit::new(layout.num_qubits());
    for (point, (&fq, &lq)) in dataset
        .points()
        .iter()
        .zip(layout.feature.iter().zip(&layout.label))
    {
        circuit.push(encode_gate(fq, &point.features)?)?;
        if point.label.bit() {
            circuit.push(GateOp::x(lq))?;
        }
    }
    circuit.push(encode_gate(layout.test, test)?)?;
    Ok(circuit)
}

const CSV_HEADER: [&str; 3] = ["x1", "x2", "y"];

pub fn load_dataset_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_dataset_csv(file)
}

/// Reads the `x1,x2,y` CSV format. Line numbers in errors count the header as line 1.
pub fn read_dataset_csv(reader: impl Read) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(Error::validation("dataset file is empty")),
        Some(r) => r.map_err(|e| csv_error(e, 1))?,
    };
    let fields: Vec<&str> = header.iter().map(str::trim).collect();
    if fields != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header x1,x2,y, got {}", fields.join(",")),
        });
    }

    let mut points = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let num = |i: usize| {
            record[i].trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{}: {:?}: {e}", CSV_HEADER[i], &record[i]),
            })
        };
        let (x1, x2) = (num(0)?, num(1)?);
        let label = record[2]
            .trim()
            .parse::<Label>()
            .map_err(|_| Error::Parse {
                line,
                message: format!("y must be 0 or 1, got {:?}", &record[2]),
            })?;
        let point = LabeledPoint::new(x1, x2, label);
        point.features.check_encodable().map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        points.push(point);
    }
    if points.is_empty() {
        return Err(Error::validation("dataset has a header but no rows"));
    }
    LabeledDataset::new(points)
}

pub fn write_dataset_csv(dataset: &LabeledDataset, writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER).map_err(csv_io)?;
    for p in dataset.points() {
        w.write_record([
            p.features.x1.to_string(),
            p.features.x2.to_string(),
            u8::from(p.label).to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::StateVector;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn encode_examples() {
        let a = encode_vector(&FeatureVector2D::new(1.0, 0.0)).unwrap();
        assert_eq!((a.amp0, a.amp1), (1.0, 0.0));
        let a = encode_vector(&FeatureVector2D::new(2.0, 2.0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(a.amp0, h, 1e-12) && close(a.amp1, h, 1e-12));
        // 1/sqrt(10), 3/sqrt(10)
        let a = encode_vector(&FeatureVector2D::new(1.0, 3.0)).unwrap();
        assert!(close(a.amp0, 0.31623, 5e-6) && close(a.amp1, 0.94868, 5e-6));
        assert!(close(a.amp0 * a.amp0 + a.amp1 * a.amp1, 1.0, 1e-15));
        assert!(matches!(
            encode_vector(&FeatureVector2D::new(0.0, 0.0)),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn negative_components_keep_sign() {
        let a = encode_vector(&FeatureVector2D::new(-2.0, 2.0)).unwrap();
        assert!(a.amp0 < 0.0 && a.amp1 > 0.0);
        let mut s = StateVector::zero(1).unwrap();
        s.apply(&encode_gate(0, &FeatureVector2D::new(-2.0, 2.0)).unwrap())
            .unwrap();
        assert!(close(s.amplitudes()[0].re, a.amp0, 1e-12));
        assert!(close(s.amplitudes()[1].re, a.amp1, 1e-12));
        let mut s = StateVector::zero(1).unwrap();
        s.apply(&encode_gate(0, &FeatureVector2D::new(-1.0, -3.0)).unwrap())
            .unwrap();
        assert!(s.amplitudes()[0].re < 0.0 && s.amplitudes()[1].re < 0.0);
    }

    #[test]
    fn layout_standard_is_disjoint() {
        let l = RegisterLayout::standard(2, 4);
        l.validate().unwrap();
        assert_eq!(l.num_qubits(), 12);
        assert_eq!((l.test, l.prediction), (10, 11));
        let mut bad = l.clone();
        bad.test = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn state_prep_identity_point() {
        let ds = LabeledDataset::new(vec![LabeledPoint::new(1.0, 0.0, Label::Zero)]).unwrap();
        let layout = RegisterLayout::standard(0, 1);
        let c = build_state_prep(&ds, &FeatureVector2D::new(1.0, 0.0), &layout).unwrap();
        let mut s = StateVector::zero(layout.num_qubits()).unwrap();
        s.run(&c).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn state_prep_basis_point() {
        let ds = LabeledDataset::new(vec![LabeledPoint::new(0.0, 1.0, Label::One)]).unwrap();
        let layout = RegisterLayout::standard(0, 1);
        let c = build_state_prep(&ds, &FeatureVector2D::new(1.0, 0.0), &layout).unwrap();
        let mut s = StateVector::zero(layout.num_qubits()).unwrap();
        s.run(&c).unwrap();
        assert!(close(s.prob_one(layout.feature[0]).unwrap(), 1.0, 1e-15));
        assert!(close(s.prob_one(layout.label[0]).unwrap(), 1.0, 1e-15));
        assert!(close(s.prob_one(layout.test).unwrap(), 0.0, 1e-15));
        assert_eq!(s.prob_one(layout.prediction).unwrap(), 0.0);
    }

    #[test]
    fn state_prep_toy_marginals() {
        let (ds, test) = LabeledDataset::toy();
        let layout = RegisterLayout::standard(0, 4);
        let c = build_state_prep(&ds, &test, &layout).unwrap();
        assert_eq!(c.num_qubits(), 10);
        let mut s = StateVector::zero(layout.num_qubits()).unwrap();
        s.run(&c).unwrap();
        for (p, (&fq, &lq)) in ds
            .points()
            .iter()
            .zip(layout.feature.iter().zip(&layout.label))
        {
            let a = encode_vector(&p.features).unwrap();
            assert!(close(s.prob_one(fq).unwrap(), a.amp1 * a.amp1, 1e-10));
            assert!(close(s.prob_one(lq).unwrap(), p.label.as_f64(), 1e-12));
        }
        assert!(close(s.prob_one(layout.test).unwrap(), 0.5, 1e-10));
    }

    #[test]
    fn state_prep_size_mismatch() {
        let (ds, test) = LabeledDataset::toy();
        let err = build_state_prep(&ds, &test, &RegisterLayout::standard(0, 3)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn csv_toy_rows() {
        let text = "x1,x2,y\n1,3,0\n-2,2,1\n3,0,0\n3,1,1\n";
        let ds = read_dataset_csv(text.as_bytes()).unwrap();
        assert_eq!(ds, LabeledDataset::toy().0);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            read_dataset_csv("x1,x2,y\n".as_bytes()),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            read_dataset_csv("".as_bytes()),
            Err(Error::Validation(_))
        ));
        match read_dataset_csv("x1,x2,y\na,b,c\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match read_dataset_csv("x1,x2,y\n1,2,0\n1,2,3,0\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match read_dataset_csv("x1,x2,y\n1,2,2\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match read_dataset_csv("x1,x2,y\n0,0,1\n".as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("zero vector"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_dataset_csv("a,b,c\n1,2,0\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn csv_write_then_read() {
        let (ds, _) = LabeledDataset::toy();
        let mut buf = Vec::new();
        write_dataset_csv(&ds, &mut buf).unwrap();
        assert_eq!(read_dataset_csv(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn parse_vector_flag() {
        assert_eq!(
            "1,3".parse::<FeatureVector2D>().unwrap(),
            FeatureVector2D::new(1.0, 3.0)
        );
        assert_eq!(
            " -2 , 2.5".parse::<FeatureVector2D>().unwrap(),
            FeatureVector2D::new(-2.0, 2.5)
        );
        assert!("1".parse::<FeatureVector2D>().is_err());
        assert!("1,2,3".parse::<FeatureVector2D>().is_err());
    }
}
