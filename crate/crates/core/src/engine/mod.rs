//! Dense statevector engine.
//!
//! Amplitude `i` is the coefficient of basis state `|i>` with qubit 0 as the
//! least significant bit. Gates are applied in place by the kernels in
//! [`kernels`]; no operator larger than 4x4 is ever built. Gate arithmetic is
//! done in double precision and rounded to the storage type on store. Reductions run in
//! double precision over a fixed tree regardless of storage precision or
//! worker count.

mod kernels;
mod reduce;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::{Complex32, Complex64};
use rayon::{ThreadPool, ThreadPoolBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{validate_circuit, Circuit, CircuitError, GateOp};
use kernels::{Prepared, Workers};

/// Registers above this size are refused outright, whatever the memory budget.
pub const MAX_QUBITS: usize = 48;

/// Environment variable overriding the default worker count.
pub const THREADS_ENV: &str = "QSV_THREADS";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("MemoryLimit({n}): {required_bytes} bytes of amplitudes exceed the {budget_bytes}-byte budget")]
    MemoryLimit { n: usize, required_bytes: u128, budget_bytes: u64 },
    #[error("DesignLimit({n}): at most {max} qubits are supported")]
    DesignLimit { n: usize, max: usize },
    #[error("TimeLimit({n}): deadline reached after {gate_index} gates")]
    TimeLimit { n: usize, gate_index: usize },
    #[error("state has {state} qubits but circuit has {circuit}")]
    QubitMismatch { state: usize, circuit: usize },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(#[from] CircuitError),
    #[error("register needs at least one qubit")]
    ZeroQubits,
    #[error("worker count must be at least 1")]
    ZeroWorkers,
    #[error("failed to start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn bytes_per_amplitude(self) -> usize {
        match self {
            Precision::Single => std::mem::size_of::<Complex32>(),
            Precision::Double => std::mem::size_of::<Complex64>(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Single => "single",
            Precision::Double => "double",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single" | "f32" | "32" => Ok(Precision::Single),
            "double" | "f64" | "64" => Ok(Precision::Double),
            other => Err(format!("unknown precision `{other}` (expected single or double)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThreadMode {
    SingleThread,
    MultiThread(usize),
}

impl ThreadMode {
    /// `QSV_THREADS` if set to a positive integer, otherwise the available parallelism.
    pub fn default_workers() -> usize {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }

    /// One worker is [`ThreadMode::SingleThread`]; more is a pool.
    pub fn from_workers(k: usize) -> Self {
        if k <= 1 {
            ThreadMode::SingleThread
        } else {
            ThreadMode::MultiThread(k)
        }
    }

    pub fn multi_default() -> Self {
        ThreadMode::MultiThread(Self::default_workers())
    }

    pub fn workers(self) -> usize {
        match self {
            ThreadMode::SingleThread => 1,
            ThreadMode::MultiThread(k) => k,
        }
    }
}

impl fmt::Display for ThreadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.workers())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryBudget {
    pub max_bytes: u64,
}

impl MemoryBudget {
    pub const fn bytes(max_bytes: u64) -> Self {
        MemoryBudget { max_bytes }
    }

    pub const fn mib(mib: u64) -> Self {
        MemoryBudget { max_bytes: mib << 20 }
    }

    pub const fn gib(gib: u64) -> Self {
        MemoryBudget { max_bytes: gib << 30 }
    }

    pub const fn unlimited() -> Self {
        MemoryBudget { max_bytes: u64::MAX }
    }

    pub fn required_bytes(n: usize, precision: Precision) -> u128 {
        (1u128 << n.min(127)) * precision.bytes_per_amplitude() as u128
    }

    /// Largest register this budget admits at `precision`.
    pub fn max_qubits(&self, precision: Precision) -> usize {
        (1..=MAX_QUBITS)
            .take_while(|&n| Self::required_bytes(n, precision) <= self.max_bytes as u128)
            .last()
            .unwrap_or(0)
    }
}

impl Default for MemoryBudget {
    fn default() -> Self {
        Self::unlimited()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Amplitudes {
    Single(Vec<Complex32>),
    Double(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Amplitudes,
}

fn alloc_zeroed<T: Clone + Default>(len: usize, n: usize, budget: MemoryBudget, precision: Precision) -> Result<Vec<T>, EngineError> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| EngineError::MemoryLimit {
        n,
        required_bytes: MemoryBudget::required_bytes(n, precision),
        budget_bytes: budget.max_bytes,
    })?;
    v.resize(len, T::default());
    Ok(v)
}

/// `|0...0>` on `n` qubits, refused if it would not fit in `budget`.
pub fn init_state(n: usize, precision: Precision, budget: MemoryBudget) -> Result<StateVector, EngineError> {
    if n == 0 {
        return Err(EngineError::ZeroQubits);
    }
    if n > MAX_QUBITS {
        return Err(EngineError::DesignLimit { n, max: MAX_QUBITS });
    }
    let required = MemoryBudget::required_bytes(n, precision);
    if required > budget.max_bytes as u128 {
        return Err(EngineError::MemoryLimit { n, required_bytes: required, budget_bytes: budget.max_bytes });
    }
    let len = 1usize << n;
    let amps = match precision {
        Precision::Single => {
            let mut v: Vec<Complex32> = alloc_zeroed(len, n, budget, precision)?;
            v[0] = Complex32::new(1.0, 0.0);
            Amplitudes::Single(v)
        }
        Precision::Double => {
            let mut v: Vec<Complex64> = alloc_zeroed(len, n, budget, precision)?;
            v[0] = Complex64::new(1.0, 0.0);
            Amplitudes::Double(v)
        }
    };
    Ok(StateVector { num_qubits: n, amps })
}

impl StateVector {
    /// Builds a state from explicit amplitudes, rounding to `precision`.
    /// Panics unless `amps.len()` is a power of two of at least 2.
    pub fn from_amplitudes(amps: &[Complex64], precision: Precision) -> Self {
        assert!(amps.len() >= 2 && amps.len().is_power_of_two(), "length must be 2^n with n >= 1");
        let num_qubits = amps.len().trailing_zeros() as usize;
        let amps = match precision {
            Precision::Single => {
                Amplitudes::Single(amps.iter().map(|z| Complex32::new(z.re as f32, z.im as f32)).collect())
            }
            Precision::Double => Amplitudes::Double(amps.to_vec()),
        };
        StateVector { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn precision(&self) -> Precision {
        match self.amps {
            Amplitudes::Single(_) => Precision::Single,
            Amplitudes::Double(_) => Precision::Double,
        }
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        match &self.amps {
            Amplitudes::Single(v) => Complex64::new(v[index].re as f64, v[index].im as f64),
            Amplitudes::Double(v) => v[index],
        }
    }

    /// All amplitudes widened to double precision.
    pub fn to_complex64(&self) -> Vec<Complex64> {
        match &self.amps {
            Amplitudes::Single(v) => v.iter().map(|z| Complex64::new(z.re as f64, z.im as f64)).collect(),
            Amplitudes::Double(v) => v.clone(),
        }
    }

    /// Raw storage when the state is double precision.
    pub fn as_double(&self) -> Option<&[Complex64]> {
        match &self.amps {
            Amplitudes::Double(v) => Some(v),
            Amplitudes::Single(_) => None,
        }
    }

    /// Raw storage when the state is single precision.
    pub fn as_single(&self) -> Option<&[Complex32]> {
        match &self.amps {
            Amplitudes::Single(v) => Some(v),
            Amplitudes::Double(_) => None,
        }
    }

    /// Resets to `|0...0>` without reallocating.
    pub fn reset(&mut self) {
        match &mut self.amps {
            Amplitudes::Single(v) => {
                v.fill(Complex32::default());
                v[0] = Complex32::new(1.0, 0.0);
            }
            Amplitudes::Double(v) => {
                v.fill(Complex64::default());
                v[0] = Complex64::new(1.0, 0.0);
            }
        }
    }
}

/// Applies gates with a fixed thread configuration. The worker pool is
/// created once, so constructing an executor stays outside timed regions.
pub struct Executor {
    mode: ThreadMode,
    pool: Option<ThreadPool>,
}

impl fmt::Debug for Executor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Executor").field("mode", &self.mode).finish()
    }
}

impl Executor {
    pub fn new(mode: ThreadMode) -> Result<Self, EngineError> {
        let pool = match mode {
            ThreadMode::SingleThread => None,
            ThreadMode::MultiThread(0) => return Err(EngineError::ZeroWorkers),
            ThreadMode::MultiThread(k) => Some(
                ThreadPoolBuilder::new()
                    .num_threads(k)
                    .thread_name(|i| format!("qsv-worker-{i}"))
                    .build()
                    .map_err(|e| EngineError::Pool(e.to_string()))?,
            ),
        };
        Ok(Executor { mode, pool })
    }

    pub fn single_thread() -> Self {
        Executor { mode: ThreadMode::SingleThread, pool: None }
    }

    pub fn mode(&self) -> ThreadMode {
        self.mode
    }

    fn workers(&self) -> Option<Workers<'_>> {
        self.pool.as_ref().map(|pool| Workers { pool, count: self.mode.workers() })
    }

    /// Applies one gate in place. The op must be valid for the state's register.
    pub fn apply_gate(&self, s: &mut StateVector, op: &GateOp) {
        debug_assert!(op.check(s.num_qubits).is_ok());
        let w = self.workers();
        let kernel = Prepared::new(op);
        match &mut s.amps {
            Amplitudes::Single(v) => kernel.apply(v, w),
            Amplitudes::Double(v) => kernel.apply(v, w),
        }
    }

    /// Applies every op in order, checking `deadline` before each gate.
    pub fn run(&self, s: &mut StateVector, c: &Circuit, deadline: Option<Duration>) -> Result<(), EngineError> {
        if s.num_qubits != c.num_qubits {
            return Err(EngineError::QubitMismatch { state: s.num_qubits, circuit: c.num_qubits });
        }
        validate_circuit(c)?;
        let start = Instant::now();
        for (gate_index, op) in c.ops.iter().enumerate() {
            if let Some(limit) = deadline {
                if start.elapsed() >= limit {
                    return Err(EngineError::TimeLimit { n: s.num_qubits, gate_index });
                }
            }
            self.apply_gate(s, op);
        }
        Ok(())
    }

    pub fn norm(&self, s: &StateVector) -> f64 {
        let w = self.workers();
        let sq = match &s.amps {
            Amplitudes::Single(v) => reduce::norm_sqr(v, w),
            Amplitudes::Double(v) => reduce::norm_sqr(v, w),
        };
        sq.sqrt()
    }

    pub fn expectation_z_all(&self, s: &StateVector) -> Vec<f64> {
        let w = self.workers();
        match &s.amps {
            Amplitudes::Single(v) => reduce::expectation_z(v, s.num_qubits, w),
            Amplitudes::Double(v) => reduce::expectation_z(v, s.num_qubits, w),
        }
    }
}

/// Single-thread convenience wrapper around [`Executor::apply_gate`].
pub fn apply_gate(s: &mut StateVector, op: &GateOp) {
    Executor::single_thread().apply_gate(s, op);
}

/// Runs `c` on `s` with a one-off executor for `mode`.
pub fn run_circuit(s: &mut StateVector, c: &Circuit, mode: ThreadMode, deadline: Option<Duration>) -> Result<(), EngineError> {
    Executor::new(mode)?.run(s, c, deadline)
}

pub fn expectation_z_all(s: &StateVector) -> Vec<f64> {
    Executor::single_thread().expectation_z_all(s)
}

pub fn norm(s: &StateVector) -> f64 {
    Executor::single_thread().norm(s)
}
