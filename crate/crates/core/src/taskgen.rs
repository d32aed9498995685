//! Generators for the three benchmark workloads: Trotterized XYZ-Heisenberg
//! dynamics, random fSim circuits on a 2D grid, and the quantum Fourier
//! transform.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, GateKind, GateOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("grid {rows}x{cols} cannot hold {n} qubits")]
    GridTooSmall { rows: usize, cols: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Heisenberg,
    Rqc,
    Qft,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Heisenberg, TaskKind::Rqc, TaskKind::Qft];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Heisenberg => "heisenberg",
            TaskKind::Rqc => "rqc",
            TaskKind::Qft => "qft",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "heisenberg" => Ok(TaskKind::Heisenberg),
            "rqc" => Ok(TaskKind::Rqc),
            "qft" => Ok(TaskKind::Qft),
            other => Err(format!("unknown task `{other}` (expected heisenberg, rqc or qft)")),
        }
    }
}

/// Couplings, field and time discretisation of the open XYZ chain
/// `H = -Jx sum XX - Jy sum YY - Jz sum ZZ + hz sum Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergParams {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub hz: f64,
    pub dt: f64,
    pub tf: f64,
}

impl Default for HeisenbergParams {
    fn default() -> Self {
        HeisenbergParams { jx: 1.0, jy: 0.1, jz: 0.1, hz: 0.1, dt: 0.01, tf: 1.0 }
    }
}

impl HeisenbergParams {
    pub fn validate(&self) -> Result<(), TaskError> {
        let all = [self.jx, self.jy, self.jz, self.hz, self.dt, self.tf];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(TaskError::InvalidParams("non-finite Heisenberg parameter".into()));
        }
        if self.dt <= 0.0 {
            return Err(TaskError::InvalidParams(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.tf < 0.0 {
            return Err(TaskError::InvalidParams(format!("tf must be >= 0, got {}", self.tf)));
        }
        Ok(())
    }

    /// Number of Trotter steps, `round(tf / dt)`.
    pub fn m_steps(&self) -> usize {
        (self.tf / self.dt).round() as usize
    }

    /// `|M dt - tf|`, nonzero when `tf` is not a multiple of `dt`.
    pub fn time_mismatch(&self) -> f64 {
        (self.m_steps() as f64 * self.dt - self.tf).abs()
    }

    /// Per-step bond angles `(Jx dt, Jy dt, Jz dt)`.
    pub fn angles(&self) -> (f64, f64, f64) {
        (self.jx * self.dt, self.jy * self.dt, self.jz * self.dt)
    }
}

/// Two-qubit unitary `exp(i (alpha XX + beta YY + gamma ZZ))` on qubits
/// `(a, b)` as three CX gates and five rotations, exact up to global phase.
pub fn nsim_decompose_on(alpha: f64, beta: f64, gamma: f64, a: usize, b: usize) -> Vec<GateOp> {
    vec![
        GateOp::rot(GateKind::RZ, -FRAC_PI_2, b),
        GateOp::two(GateKind::CX, b, a),
        GateOp::rot(GateKind::RZ, -FRAC_PI_2 - 2.0 * gamma, a),
        GateOp::rot(GateKind::RY, FRAC_PI_2 + 2.0 * alpha, b),
        GateOp::two(GateKind::CX, a, b),
        GateOp::rot(GateKind::RY, -FRAC_PI_2 - 2.0 * beta, b),
        GateOp::two(GateKind::CX, b, a),
        GateOp::rot(GateKind::RZ, FRAC_PI_2, a),
    ]
}

/// [`nsim_decompose_on`] acting on qubits (0, 1).
pub fn nsim_decompose(alpha: f64, beta: f64, gamma: f64) -> Vec<GateOp> {
    nsim_decompose_on(alpha, beta, gamma, 0, 1)
}

/// One first-order Trotter step: even bonds, odd bonds, then the field on every site.
pub fn heisenberg_step(n: usize, p: &HeisenbergParams) -> Vec<GateOp> {
    let (alpha, beta, gamma) = p.angles();
    let mut ops = Vec::new();
    for parity in [0, 1] {
        for j in (parity..n.saturating_sub(1)).step_by(2) {
            ops.extend(nsim_decompose_on(alpha, beta, gamma, j, j + 1));
        }
    }
    // exp(-i hz dt Z) = RZ(2 hz dt)
    for j in 0..n {
        ops.push(GateOp::rot(GateKind::RZ, 2.0 * p.hz * p.dt, j));
    }
    ops
}

pub fn build_heisenberg(n: usize, p: &HeisenbergParams) -> Result<Circuit, TaskError> {
    p.validate()?;
    if n == 0 {
        return Err(TaskError::InvalidParams("need at least one qubit".into()));
    }
    let coupled = p.jx != 0.0 || p.jy != 0.0 || p.jz != 0.0;
    if n < 2 && coupled {
        return Err(TaskError::InvalidParams("nonzero couplings need n >= 2".into()));
    }
    let mismatch = p.time_mismatch();
    if mismatch > 1e-12 {
        log::warn!("tf = {} is not a multiple of dt = {}; |M dt - tf| = {mismatch:e}", p.tf, p.dt);
    }
    let step = heisenberg_step(n, p);
    let mut c = Circuit::with_label(n, "heisenberg");
    for _ in 0..p.m_steps() {
        c.ops.extend(step.iter().cloned());
    }
    Ok(c)
}

/// Standard H + controlled-phase ladder followed by the qubit-reversal swaps.
///
/// The ladder starts at the most significant qubit so that, with qubit 0 as
/// the least significant bit, the circuit unitary has entries
/// `exp(2 pi i j k / 2^n) / sqrt(2^n)` exactly.
pub fn build_qft(n: usize) -> Circuit {
    let mut c = Circuit::with_label(n, "qft");
    for k in 0..n {
        let target = n - 1 - k;
        c.push(GateOp::one(GateKind::H, target));
        for j in (k + 1)..n {
            let control = n - 1 - j;
            c.push(GateOp::cp(PI / (1u64 << (j - k)) as f64, control, target));
        }
    }
    for k in 0..n / 2 {
        c.push(GateOp::two(GateKind::SWAP, k, n - 1 - k));
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RqcParams {
    pub seed: u64,
    pub cycles: usize,
    pub theta: f64,
    pub phi: f64,
    /// Grid shape; `None` picks one with [`Grid::for_qubits`].
    pub grid: Option<(usize, usize)>,
}

impl Default for RqcParams {
    fn default() -> Self {
        RqcParams { seed: 0, cycles: 14, theta: FRAC_PI_2, phi: FRAC_PI_6, grid: None }
    }
}

/// Coupler classes activated in turn, one per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CouplerPattern {
    /// Horizontal couplers starting at an even column.
    E,
    /// Horizontal couplers starting at an odd column.
    F,
    /// Vertical couplers starting at an even row.
    G,
    /// Vertical couplers starting at an odd row.
    H,
}

impl CouplerPattern {
    pub const SEQUENCE: [CouplerPattern; 4] =
        [CouplerPattern::E, CouplerPattern::F, CouplerPattern::G, CouplerPattern::H];

    pub fn for_cycle(cycle: usize) -> Self {
        Self::SEQUENCE[cycle % 4]
    }
}

/// Row-major qubit grid; sites at or beyond `n` are unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, n: usize) -> Result<Self, TaskError> {
        if rows * cols < n {
            return Err(TaskError::GridTooSmall { rows, cols, n });
        }
        Ok(Grid { rows, cols, n })
    }

    /// `floor(sqrt(n))` rows and as many columns as needed.
    pub fn for_qubits(n: usize) -> Self {
        let mut rows = (n as f64).sqrt().floor() as usize;
        while rows * rows > n {
            rows -= 1;
        }
        while (rows + 1) * (rows + 1) <= n {
            rows += 1;
        }
        let rows = rows.max(1);
        let cols = n.div_ceil(rows);
        Grid { rows, cols, n }
    }

    fn site(&self, r: usize, c: usize) -> Option<usize> {
        let q = r * self.cols + c;
        (r < self.rows && c < self.cols && q < self.n).then_some(q)
    }

    /// Active couplers of a pattern, sorted by first qubit. Each class is a matching.
    pub fn couplers(&self, pattern: CouplerPattern) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let (dr, dc, parity) = match pattern {
                    CouplerPattern::E => (0, 1, c % 2 == 0),
                    CouplerPattern::F => (0, 1, c % 2 == 1),
                    CouplerPattern::G => (1, 0, r % 2 == 0),
                    CouplerPattern::H => (1, 0, r % 2 == 1),
                };
                if !parity {
                    continue;
                }
                if let (Some(a), Some(b)) = (self.site(r, c), self.site(r + dr, c + dc)) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

const RQC_SINGLE: [GateKind; 3] = [GateKind::SX, GateKind::SY, GateKind::SW];

/// Seeded random circuit: per cycle one of {sqrt X, sqrt Y, sqrt W} on every
/// qubit (never repeating that qubit's previous choice), then fSim on the
/// couplers of the cycle's pattern.
pub fn build_rqc(n: usize, p: &RqcParams) -> Result<Circuit, TaskError> {
    if n < 2 {
        return Err(TaskError::InvalidParams("random circuits need n >= 2".into()));
    }
    if !p.theta.is_finite() || !p.phi.is_finite() {
        return Err(TaskError::InvalidParams("non-finite fSim angle".into()));
    }
    if n < 12 {
        log::debug!("rqc with n = {n} is below the usual 12-qubit floor");
    }
    let grid = match p.grid {
        Some((rows, cols)) => Grid::new(rows, cols, n)?,
        None => Grid::for_qubits(n),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut previous: Vec<Option<usize>> = vec![None; n];
    let mut c = Circuit::with_label(n, "rqc");
    for cycle in 0..p.cycles {
        for (q, prev) in previous.iter_mut().enumerate() {
            let pick = match *prev {
                None => rng.gen_range(0..3),
                Some(last) => (last + 1 + rng.gen_range(0..2)) % 3,
            };
            *prev = Some(pick);
            c.push(GateOp::one(RQC_SINGLE[pick], q));
        }
        for (a, b) in grid.couplers(CouplerPattern::for_cycle(cycle)) {
            c.push(GateOp::fsim(p.theta, p.phi, a, b));
        }
    }
    Ok(c)
}

/// Builds the circuit for `task` at size `n`.
pub fn build_task(
    task: TaskKind,
    n: usize,
    heisenberg: &HeisenbergParams,
    rqc: &RqcParams,
) -> Result<Circuit, TaskError> {
    match task {
        TaskKind::Heisenberg => build_heisenberg(n, heisenberg),
        TaskKind::Rqc => build_rqc(n, rqc),
        TaskKind::Qft => {
            if n == 0 {
                return Err(TaskError::InvalidParams("need at least one qubit".into()));
            }
            Ok(build_qft(n))
        }
    }
}
