//! Shared fixtures for the criterion benchmarks under `benches/`.

use qsv_core::{init_state, MemoryBudget, Precision, StateVector};

/// `|0...0>` on `n` qubits with no memory limit.
pub fn fresh_state(n: usize, precision: Precision) -> StateVector {
    init_state(n, precision, MemoryBudget::unlimited()).expect("state fits in memory")
}
