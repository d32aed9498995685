//! Statevector quantum-circuit simulator and benchmarking toolkit.
//!
//! * [`circuit`]: gate-level IR shared by every other module.
//! * [`qasm`]: OpenQASM 2.0 subset reader and writer.
//! * [`taskgen`]: Heisenberg Trotter, random fSim and QFT circuit generators.
//! * [`engine`]: dense statevector kernels at single or double precision.
//! * [`validate`]: dense oracles and cross-configuration metrics.
//! * [`bench`]: timed runs, sweeps and CSV/JSON records.
//! * [`analysis`]: log-linear scaling fits and speedup ratios.

pub mod analysis;
pub mod bench;
pub mod circuit;
pub mod engine;
pub mod qasm;
pub mod taskgen;
pub mod validate;

pub use analysis::{fit_points, fit_scaling, speedup_ratio, AnalysisError, ScalingFit, WindowStart};
pub use bench::{run_benchmark, sweep, BenchConfig, BenchError, BenchRecord, Outcome};
pub use circuit::{gate_stats, validate_circuit, Circuit, CircuitError, GateKind, GateOp, GateStats};
pub use engine::{
    init_state, EngineError, Executor, MemoryBudget, Precision, StateVector, ThreadMode,
};
pub use qasm::{emit_qasm, parse_qasm, QasmError};
pub use taskgen::{
    build_heisenberg, build_task, build_qft, build_rqc, nsim_decompose, HeisenbergParams, RqcParams, TaskKind,
};
pub use validate::{
    compare_states, delta_expectation, dense_apply, dense_unitary, qft_sigma_z_metric, ValidateError,
    ValidationReport,
};
