//! Gate-level circuit representation shared by the generators, the QASM
//! front end, the engine and the dense oracles.
//!
//! Qubit 0 is the least-significant bit of a basis-state index. For a
//! two-qubit gate the 4x4 matrix is written in the basis
//! `2 * bit(qubits[0]) + bit(qubits[1])`, so `CX(c, t)` has the textbook
//! matrix with `c` as control.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    /// Square root of X.
    SX,
    /// Square root of Y.
    SY,
    /// Square root of W = (X + Y) / sqrt(2).
    SW,
    RX,
    RY,
    RZ,
    /// Phase gate diag(1, e^{i lambda}).
    P,
    CX,
    CZ,
    /// Controlled phase diag(1, 1, 1, e^{i lambda}).
    CP,
    SWAP,
    /// fSim(theta, phi).
    FSIM,
}

impl GateKind {
    pub const ALL: [GateKind; 16] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::SX,
        GateKind::SY,
        GateKind::SW,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::P,
        GateKind::CX,
        GateKind::CZ,
        GateKind::CP,
        GateKind::SWAP,
        GateKind::FSIM,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::CX | GateKind::CZ | GateKind::CP | GateKind::SWAP | GateKind::FSIM => 2,
            _ => 1,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::P | GateKind::CP => 1,
            GateKind::FSIM => 2,
            _ => 0,
        }
    }

    /// Lower-case name used in QASM documents.
    pub fn qasm_name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::SX => "sx",
            GateKind::SY => "sy",
            GateKind::SW => "sw",
            GateKind::RX => "rx",
            GateKind::RY => "ry",
            GateKind::RZ => "rz",
            GateKind::P => "p",
            GateKind::CX => "cx",
            GateKind::CZ => "cz",
            GateKind::CP => "cp",
            GateKind::SWAP => "swap",
            GateKind::FSIM => "fsim",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.qasm_name())
    }
}

/// Unitary of a gate, in double precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

impl GateMatrix {
    pub fn dim(&self) -> usize {
        match self {
            GateMatrix::One(_) => 2,
            GateMatrix::Two(_) => 4,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self {
            GateMatrix::One(m) => m[row][col],
            GateMatrix::Two(m) => m[row][col],
        }
    }
}

/// `sqrt(P)` for an involutory Hermitian `P`: ((1+i) I + (1-i) P) / 2.
fn sqrt_involution(p: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let a = Complex64::new(0.5, 0.5);
    let b = Complex64::new(0.5, -0.5);
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let id = if r == c { ONE } else { ZERO };
            out[r][c] = a * id + b * p[r][c];
        }
    }
    out
}

fn diag4(d: [Complex64; 4]) -> [[Complex64; 4]; 4] {
    let mut m = [[ZERO; 4]; 4];
    for (k, v) in d.into_iter().enumerate() {
        m[k][k] = v;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub qubits: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, params: Vec<f64>, qubits: Vec<usize>) -> Self {
        GateOp { kind, params, qubits }
    }

    pub fn one(kind: GateKind, q: usize) -> Self {
        Self::new(kind, Vec::new(), vec![q])
    }

    pub fn rot(kind: GateKind, angle: f64, q: usize) -> Self {
        Self::new(kind, vec![angle], vec![q])
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Self {
        Self::new(kind, Vec::new(), vec![a, b])
    }

    pub fn cp(lambda: f64, control: usize, target: usize) -> Self {
        Self::new(GateKind::CP, vec![lambda], vec![control, target])
    }

    pub fn fsim(theta: f64, phi: f64, a: usize, b: usize) -> Self {
        Self::new(GateKind::FSIM, vec![theta, phi], vec![a, b])
    }

    /// Checks this op against a register of `num_qubits`.
    pub fn check(&self, num_qubits: usize) -> Result<(), GateRule> {
        if self.qubits.len() != self.kind.arity() {
            return Err(GateRule::QubitArityMismatch {
                expected: self.kind.arity(),
                found: self.qubits.len(),
            });
        }
        if self.params.len() != self.kind.param_count() {
            return Err(GateRule::ParamArityMismatch {
                expected: self.kind.param_count(),
                found: self.params.len(),
            });
        }
        for &q in &self.qubits {
            if q >= num_qubits {
                return Err(GateRule::QubitOutOfRange { qubit: q, num_qubits });
            }
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(GateRule::DuplicateQubit { qubit: self.qubits[0] });
        }
        Ok(())
    }

    /// The gate's unitary. Panics if the parameter count is wrong; call
    /// [`GateOp::check`] first on untrusted ops.
    pub fn matrix(&self) -> GateMatrix {
        let p = |k: usize| self.params[k];
        let one = |m: [[Complex64; 2]; 2]| GateMatrix::One(m);
        let x = [[ZERO, ONE], [ONE, ZERO]];
        let y = [[ZERO, -I], [I, ZERO]];
        match self.kind {
            GateKind::H => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                one([[h, h], [h, -h]])
            }
            GateKind::X => one(x),
            GateKind::Y => one(y),
            GateKind::Z => one([[ONE, ZERO], [ZERO, -ONE]]),
            GateKind::SX => one(sqrt_involution(x)),
            GateKind::SY => one(sqrt_involution(y)),
            GateKind::SW => {
                let e = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
                one(sqrt_involution([[ZERO, e.conj()], [e, ZERO]]))
            }
            GateKind::RX => {
                let (s, c) = (p(0) / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let s = Complex64::new(0.0, -s);
                one([[c, s], [s, c]])
            }
            GateKind::RY => {
                let (s, c) = (p(0) / 2.0).sin_cos();
                one([
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ])
            }
            GateKind::RZ => {
                let half = p(0) / 2.0;
                one([
                    [Complex64::from_polar(1.0, -half), ZERO],
                    [ZERO, Complex64::from_polar(1.0, half)],
                ])
            }
            GateKind::P => one([[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, p(0))]]),
            GateKind::CX => GateMatrix::Two([
                [ONE, ZERO, ZERO, ZERO],
                [ZERO, ONE, ZERO, ZERO],
                [ZERO, ZERO, ZERO, ONE],
                [ZERO, ZERO, ONE, ZERO],
            ]),
            GateKind::CZ => GateMatrix::Two(diag4([ONE, ONE, ONE, -ONE])),
            GateKind::CP => GateMatrix::Two(diag4([ONE, ONE, ONE, Complex64::from_polar(1.0, p(0))])),
            GateKind::SWAP => GateMatrix::Two([
                [ONE, ZERO, ZERO, ZERO],
                [ZERO, ZERO, ONE, ZERO],
                [ZERO, ONE, ZERO, ZERO],
                [ZERO, ZERO, ZERO, ONE],
            ]),
            GateKind::FSIM => {
                let (s, c) = p(0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let s = Complex64::new(0.0, -s);
                GateMatrix::Two([
                    [ONE, ZERO, ZERO, ZERO],
                    [ZERO, c, s, ZERO],
                    [ZERO, s, c, ZERO],
                    [ZERO, ZERO, ZERO, Complex64::from_polar(1.0, -p(1))],
                ])
            }
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", ps.join(","))?;
        }
        let qs: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(f, " {}", qs.join(","))
    }
}

/// The rule an op broke, without its position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GateRule {
    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {qubit} used twice")]
    DuplicateQubit { qubit: usize },
    #[error("expected {expected} parameters, found {found}")]
    ParamArityMismatch { expected: usize, found: usize },
    #[error("expected {expected} qubits, found {found}")]
    QubitArityMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("op {index}: {rule}")]
pub struct CircuitError {
    pub index: usize,
    pub rule: GateRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub ops: Vec<GateOp>,
    pub label: String,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit { num_qubits, ops: Vec::new(), label: String::new() }
    }

    pub fn with_label(num_qubits: usize, label: impl Into<String>) -> Self {
        Circuit { num_qubits, ops: Vec::new(), label: label.into() }
    }

    pub fn push(&mut self, op: GateOp) {
        self.ops.push(op);
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Appends a copy of every op in `other`. Both must act on the same register size.
    pub fn extend_from(&mut self, other: &Circuit) {
        self.ops.extend(other.ops.iter().cloned());
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        validate_circuit(self)
    }

    pub fn stats(&self) -> GateStats {
        gate_stats(self)
    }
}

/// Checks every op, reporting the first offender.
pub fn validate_circuit(c: &Circuit) -> Result<(), CircuitError> {
    for (index, op) in c.ops.iter().enumerate() {
        op.check(c.num_qubits).map_err(|rule| CircuitError { index, rule })?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateStats {
    pub sqg_count: usize,
    pub tqg_count: usize,
    pub total: usize,
}

pub fn gate_stats(c: &Circuit) -> GateStats {
    let mut stats = GateStats::default();
    for op in &c.ops {
        match op.qubits.len() {
            1 => stats.sqg_count += 1,
            2 => stats.tqg_count += 1,
            _ => {}
        }
    }
    stats.total = stats.sqg_count + stats.tqg_count;
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn is_unitary(m: &GateMatrix) -> bool {
        let d = m.dim();
        (0..d).all(|r| {
            (0..d).all(|c| {
                let dot: Complex64 = (0..d).map(|k| m.entry(r, k) * m.entry(c, k).conj()).sum();
                let want = if r == c { 1.0 } else { 0.0 };
                (dot - want).norm() < 1e-14
            })
        })
    }

    fn sample_op(kind: GateKind) -> GateOp {
        let params = vec![0.37; kind.param_count()];
        let qubits = (0..kind.arity()).collect();
        GateOp::new(kind, params, qubits)
    }

    #[test]
    fn minimal_cx_is_valid() {
        let mut c = Circuit::new(2);
        c.push(GateOp::two(GateKind::CX, 0, 1));
        assert_eq!(validate_circuit(&c), Ok(()));
    }

    #[test]
    fn cx_on_single_qubit_register_is_out_of_range() {
        let mut c = Circuit::new(1);
        c.push(GateOp::two(GateKind::CX, 0, 1));
        let err = validate_circuit(&c).unwrap_err();
        assert_eq!(err.index, 0);
        assert_eq!(err.rule, GateRule::QubitOutOfRange { qubit: 1, num_qubits: 1 });
    }

    #[test]
    fn fsim_with_one_param_is_rejected() {
        let mut c = Circuit::new(2);
        c.push(GateOp::new(GateKind::FSIM, vec![FRAC_PI_2], vec![0, 1]));
        let err = validate_circuit(&c).unwrap_err();
        assert_eq!(err.rule, GateRule::ParamArityMismatch { expected: 2, found: 1 });
    }

    #[test]
    fn duplicate_and_first_offender() {
        let mut c = Circuit::new(3);
        c.push(GateOp::one(GateKind::H, 2));
        c.push(GateOp::two(GateKind::CZ, 1, 1));
        c.push(GateOp::one(GateKind::H, 7));
        let err = validate_circuit(&c).unwrap_err();
        assert_eq!(err.index, 1);
        assert_eq!(err.rule, GateRule::DuplicateQubit { qubit: 1 });
    }

    #[test]
    fn arity_and_param_table() {
        for kind in GateKind::ALL {
            let expected_params = match kind {
                GateKind::FSIM => 2,
                GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::P | GateKind::CP => 1,
                _ => 0,
            };
            assert_eq!(kind.param_count(), expected_params, "{kind}");
            assert!(kind.arity() == 1 || kind.arity() == 2);
            assert_eq!(sample_op(kind).matrix().dim(), 1 << kind.arity());
        }
    }

    #[test]
    fn every_gate_matrix_is_unitary() {
        for kind in GateKind::ALL {
            assert!(is_unitary(&sample_op(kind).matrix()), "{kind}");
        }
    }

    #[test]
    fn square_roots_square_to_paulis() {
        let sq = |k: GateKind| {
            let GateMatrix::One(m) = GateOp::one(k, 0).matrix() else { unreachable!() };
            let mut out = [[ZERO; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    out[r][c] = m[r][0] * m[0][c] + m[r][1] * m[1][c];
                }
            }
            out
        };
        let x = sq(GateKind::SX);
        assert!((x[0][1] - ONE).norm() < 1e-15 && x[0][0].norm() < 1e-15);
        let y = sq(GateKind::SY);
        assert!((y[0][1] + I).norm() < 1e-15 && (y[1][0] - I).norm() < 1e-15);
        let w = sq(GateKind::SW);
        let s = FRAC_1_SQRT_2;
        // W = (X + Y)/sqrt(2)
        assert!((w[0][1] - Complex64::new(s, -s)).norm() < 1e-15);
        assert!((w[1][0] - Complex64::new(s, s)).norm() < 1e-15);
    }

    #[test]
    fn fsim_matches_definition() {
        let m = GateOp::fsim(FRAC_PI_2, FRAC_PI_6, 0, 1).matrix();
        assert!(m.entry(1, 1).norm() < 1e-15);
        assert!((m.entry(1, 2) + I).norm() < 1e-15);
        assert!((m.entry(2, 1) + I).norm() < 1e-15);
        assert!((m.entry(3, 3) - Complex64::from_polar(1.0, -FRAC_PI_6)).norm() < 1e-15);
    }

    #[test]
    fn stats_count_by_arity() {
        assert_eq!(gate_stats(&Circuit::new(3)), GateStats { sqg_count: 0, tqg_count: 0, total: 0 });
        let mut c = Circuit::new(3);
        c.push(GateOp::one(GateKind::H, 0));
        c.push(GateOp::two(GateKind::SWAP, 0, 2));
        c.push(GateOp::rot(GateKind::RZ, 0.1, 1));
        let s = gate_stats(&c);
        assert_eq!((s.sqg_count, s.tqg_count, s.total), (2, 1, 3));
        assert_eq!(s.total, c.len());
    }
}
