//! Reference checks: dense brute-force oracles, the Heisenberg Hamiltonian,
//! the analytic Fourier matrix, and log-scale comparison metrics.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, GateOp};
use crate::engine::StateVector;
use crate::taskgen::HeisenbergParams;

/// Largest register the dense oracles accept.
pub const ORACLE_MAX_QUBITS: usize = 12;

/// Floor applied before taking log10 of an exact-zero sum.
pub const LOG_FLOOR: f64 = 1e-300;

/// A single-precision run whose ΔExpectation against double precision is at
/// or below this value is indistinguishable from a double-precision run.
pub const DOUBLE_IN_DISGUISE: f64 = -12.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidateError {
    #[error("TooLargeForOracle: {n} qubits exceeds the dense oracle limit of {max}")]
    TooLargeForOracle { n: usize, max: usize },
    #[error("LengthMismatch: {left} vs {right} entries")]
    LengthMismatch { left: usize, right: usize },
    #[error("DimensionMismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("InvalidCircuit: {0}")]
    InvalidCircuit(#[from] CircuitError),
}

fn guard(c: &Circuit) -> Result<(), ValidateError> {
    if c.num_qubits > ORACLE_MAX_QUBITS {
        return Err(ValidateError::TooLargeForOracle { n: c.num_qubits, max: ORACLE_MAX_QUBITS });
    }
    c.validate()?;
    Ok(())
}

/// Applies the full-register embedding of `op` to `psi`.
///
/// Row `r` of the embedding is nonzero only at columns agreeing with `r`
/// outside the gate's qubits; on those columns it equals the gate matrix
/// indexed by the local bits, `qubits[0]` most significant.
fn apply_embedded(op: &GateOp, psi: &mut [Complex64]) {
    let m = op.matrix();
    let k = op.qubits.len();
    let dim = 1usize << k;
    let mask: usize = op.qubits.iter().map(|q| 1usize << q).sum();
    let spread = |base: usize, local: usize| {
        op.qubits
            .iter()
            .enumerate()
            .fold(base, |acc, (j, &q)| acc | (((local >> (k - 1 - j)) & 1) << q))
    };
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    for base in (0..psi.len()).filter(|b| b & mask == 0) {
        for (s, slot) in v.iter_mut().enumerate() {
            *slot = psi[spread(base, s)];
        }
        for r in 0..dim {
            psi[spread(base, r)] = (0..dim).map(|s| m.entry(r, s) * v[s]).sum();
        }
    }
}

/// Final state of `c` from `|0…0⟩` by dense embedding, i.e. the first column
/// of [`dense_unitary`].
pub fn dense_apply(c: &Circuit) -> Result<Vec<Complex64>, ValidateError> {
    guard(c)?;
    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << c.num_qubits];
    psi[0] = Complex64::new(1.0, 0.0);
    for op in &c.ops {
        apply_embedded(op, &mut psi);
    }
    Ok(psi)
}

/// Product of per-gate embeddings in circuit order.
pub fn dense_unitary(c: &Circuit) -> Result<DMatrix<Complex64>, ValidateError> {
    guard(c)?;
    let dim = 1usize << c.num_qubits;
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    // columns are contiguous; each evolves independently
    for col in u.as_mut_slice().chunks_exact_mut(dim) {
        for op in &c.ops {
            apply_embedded(op, col);
        }
    }
    Ok(u)
}

/// `max |(U U† − I)_{jk}|`.
pub fn unitarity_error(u: &DMatrix<Complex64>) -> f64 {
    let prod = u * u.adjoint();
    let id = DMatrix::<Complex64>::identity(u.nrows(), u.ncols());
    (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The Fourier matrix with entries `ω^{jk}/√M`, `ω = e^{2πi/M}`, `M = 2^n`.
pub fn qft_matrix(n: usize) -> DMatrix<Complex64> {
    let m = 1usize << n;
    let scale = 1.0 / (m as f64).sqrt();
    DMatrix::from_fn(m, m, |j, k| {
        // reduce the exponent first so the angle stays exact
        let e = (j * k) % m;
        Complex64::from_polar(scale, 2.0 * std::f64::consts::PI * e as f64 / m as f64)
    })
}

fn pauli(which: char) -> DMatrix<Complex64> {
    let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
    match which {
        'X' => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        'Y' => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        'Z' => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => DMatrix::identity(2, 2),
    }
}

/// Tensor product with `factors[q]` acting on qubit `q`; qubit 0 is the
/// least significant index bit.
pub fn pauli_string(factors: &[char]) -> DMatrix<Complex64> {
    factors
        .iter()
        .rev()
        .fold(DMatrix::identity(1, 1), |acc: DMatrix<Complex64>, &p| acc.kronecker(&pauli(p)))
}

/// `H = −Σ (Jx XX + Jy YY + Jz ZZ) + hz Σ Z` on an open chain of `n` sites.
pub fn heisenberg_hamiltonian(n: usize, p: &HeisenbergParams) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let term = |sites: &[usize], which: char| {
        let mut f = vec!['I'; n];
        for &s in sites {
            f[s] = which;
        }
        pauli_string(&f)
    };
    for j in 0..n.saturating_sub(1) {
        for (which, coupling) in [('X', p.jx), ('Y', p.jy), ('Z', p.jz)] {
            h -= term(&[j, j + 1], which) * Complex64::new(coupling, 0.0);
        }
    }
    for j in 0..n {
        h += term(&[j], 'Z') * Complex64::new(p.hz, 0.0);
    }
    h
}

/// `exp(−i H t)`.
pub fn evolution(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    (h * Complex64::new(0.0, -t)).exp()
}

/// Spectral norm of `u − e^{iδ} v` with `δ = arg tr(v† u)`.
pub fn operator_distance(u: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> f64 {
    let tr = (v.adjoint() * u).trace();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { Complex64::new(1.0, 0.0) };
    let diff = u - v * phase;
    diff.singular_values().max()
}

/// `max_j |a_j − e^{iδ} b_j|`, with `δ` aligning the pair at the largest
/// `|a_j|`.
pub fn max_diff_up_to_phase(a: &[Complex64], b: &[Complex64]) -> Result<f64, ValidateError> {
    if a.len() != b.len() {
        return Err(ValidateError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let Some(k) = (0..a.len()).max_by(|&x, &y| a[x].norm().total_cmp(&a[y].norm())) else {
        return Ok(0.0);
    };
    let q = a[k] * b[k].conj();
    let phase = if q.norm() > 0.0 { q / q.norm() } else { Complex64::new(1.0, 0.0) };
    Ok(a.iter().zip(b).map(|(x, y)| (x - phase * y).norm()).fold(0.0, f64::max))
}

/// [`max_diff_up_to_phase`] over two states of equal size.
pub fn compare_states(s1: &StateVector, s2: &StateVector) -> Result<f64, ValidateError> {
    if s1.num_qubits() != s2.num_qubits() {
        return Err(ValidateError::DimensionMismatch { left: s1.num_qubits(), right: s2.num_qubits() });
    }
    max_diff_up_to_phase(&s1.to_complex64(), &s2.to_complex64())
}

/// `log10(max(Σ|z_i|, 1e-300)) / N`.
pub fn qft_sigma_z_metric(z: &[f64]) -> f64 {
    let n = z.len().max(1) as f64;
    let sum: f64 = z.iter().map(|v| v.abs()).sum();
    sum.max(LOG_FLOOR).log10() / n
}

/// `log10(max(Σ|z1_i − z2_i|, 1e-300))`.
pub fn delta_expectation(z1: &[f64], z2: &[f64]) -> Result<f64, ValidateError> {
    if z1.len() != z2.len() {
        return Err(ValidateError::LengthMismatch { left: z1.len(), right: z2.len() });
    }
    let sum: f64 = z1.iter().zip(z2).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum.max(LOG_FLOOR).log10())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub config_a: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_b: Option<String>,
}

impl ValidationReport {
    /// Passes when `value <= threshold`.
    pub fn new(metric: impl Into<String>, value: f64, threshold: f64, config_a: impl Into<String>, config_b: Option<String>) -> Self {
        ValidationReport {
            metric: metric.into(),
            value,
            threshold,
            pass: value <= threshold,
            config_a: config_a.into(),
            config_b,
        }
    }
}
