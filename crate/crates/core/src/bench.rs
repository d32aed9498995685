//! Wall-clock timing of circuit execution and sweeps over register size.
//!
//! The timer brackets [`Executor::run`] only. Circuit generation, state
//! allocation, and observables stay outside the timed region.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{init_state, EngineError, Executor, MemoryBudget, Precision, ThreadMode};
use crate::taskgen::{build_task, HeisenbergParams, RqcParams, TaskError, TaskKind};

pub const CSV_HEADER: [&str; 10] =
    ["task", "n", "precision", "threads", "repetitions", "wall_seconds", "outcome", "gate_total", "seed", "timestamp"];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "OK")]
    Ok,
    TimeLimit,
    MemoryLimit,
    DesignLimit,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Ok => "OK",
            Outcome::TimeLimit => "TimeLimit",
            Outcome::MemoryLimit => "MemoryLimit",
            Outcome::DesignLimit => "DesignLimit",
        }
    }

    pub fn is_ok(self) -> bool {
        self == Outcome::Ok
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "OK" => Ok(Outcome::Ok),
            "TimeLimit" => Ok(Outcome::TimeLimit),
            "MemoryLimit" => Ok(Outcome::MemoryLimit),
            "DesignLimit" => Ok(Outcome::DesignLimit),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub task: TaskKind,
    pub n_values: Vec<usize>,
    pub precision: Precision,
    /// Worker count; 1 runs single-threaded.
    pub threads: usize,
    pub repetitions: usize,
    pub deadline_seconds: Option<f64>,
    pub memory_budget: MemoryBudget,
    pub heisenberg: HeisenbergParams,
    pub rqc: RqcParams,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            task: TaskKind::Qft,
            n_values: Vec::new(),
            precision: Precision::Double,
            threads: 1,
            repetitions: 3,
            deadline_seconds: None,
            memory_budget: MemoryBudget::unlimited(),
            heisenberg: HeisenbergParams::default(),
            rqc: RqcParams::default(),
        }
    }
}

impl BenchConfig {
    pub fn new(task: TaskKind, n_values: Vec<usize>) -> Self {
        BenchConfig { task, n_values, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.repetitions == 0 {
            return Err(BenchError::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(BenchError::InvalidConfig("threads must be at least 1".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BenchError::InvalidConfig("n values must be strictly increasing".into()));
        }
        if let Some(d) = self.deadline_seconds {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(BenchError::InvalidConfig(format!("deadline must be a non-negative number of seconds, got {d}")));
            }
        }
        Ok(())
    }

    pub fn thread_mode(&self) -> ThreadMode {
        ThreadMode::from_workers(self.threads)
    }

    pub fn deadline(&self) -> Option<Duration> {
        self.deadline_seconds.map(Duration::from_secs_f64)
    }

    pub fn seed(&self) -> u64 {
        self.rqc.seed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub task: TaskKind,
    pub n: usize,
    pub precision: Precision,
    pub threads: usize,
    pub repetitions: usize,
    /// Minimum over repetitions; present only for [`Outcome::Ok`].
    pub wall_seconds: Option<f64>,
    pub outcome: Outcome,
    pub gate_total: usize,
    pub seed: u64,
    /// Unix time in seconds.
    pub timestamp: f64,
    /// Gates completed before the deadline, for [`Outcome::TimeLimit`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_index: Option<usize>,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn outcome_of(e: &EngineError) -> Option<(Outcome, Option<usize>)> {
    match e {
        EngineError::TimeLimit { gate_index, .. } => Some((Outcome::TimeLimit, Some(*gate_index))),
        EngineError::MemoryLimit { .. } => Some((Outcome::MemoryLimit, None)),
        EngineError::DesignLimit { .. } => Some((Outcome::DesignLimit, None)),
        _ => None,
    }
}

/// Times `cfg.repetitions` runs at size `n` on an existing executor.
pub fn run_benchmark_with(cfg: &BenchConfig, n: usize, executor: &Executor) -> Result<BenchRecord, BenchError> {
    cfg.validate()?;
    let circuit = build_task(cfg.task, n, &cfg.heisenberg, &cfg.rqc)?;
    let mut record = BenchRecord {
        task: cfg.task,
        n,
        precision: cfg.precision,
        threads: executor.mode().workers(),
        repetitions: cfg.repetitions,
        wall_seconds: None,
        outcome: Outcome::Ok,
        gate_total: circuit.len(),
        seed: cfg.seed(),
        timestamp: unix_now(),
        gate_index: None,
    };
    let fail = |mut record: BenchRecord, e: EngineError| match outcome_of(&e) {
        Some((outcome, gate_index)) => {
            record.outcome = outcome;
            record.gate_index = gate_index;
            Ok(record)
        }
        None => Err(BenchError::Engine(e)),
    };
    let mut state = match init_state(n, cfg.precision, cfg.memory_budget) {
        Ok(s) => s,
        Err(e) => return fail(record, e),
    };
    let mut best = f64::INFINITY;
    for rep in 0..cfg.repetitions {
        if rep > 0 {
            state.reset();
        }
        let start = Instant::now();
        let result = executor.run(&mut state, &circuit, cfg.deadline());
        let elapsed = start.elapsed().as_secs_f64();
        if let Err(e) = result {
            return fail(record, e);
        }
        best = best.min(elapsed);
    }
    record.wall_seconds = Some(best);
    log::debug!("{} n={} {:.6}s", cfg.task, n, best);
    Ok(record)
}

/// Times `cfg.repetitions` runs at size `n`.
pub fn run_benchmark(cfg: &BenchConfig, n: usize) -> Result<BenchRecord, BenchError> {
    let executor = Executor::new(cfg.thread_mode())?;
    run_benchmark_with(cfg, n, &executor)
}

/// [`sweep`], reporting each record as it completes.
pub fn sweep_with(cfg: &BenchConfig, mut on_record: impl FnMut(&BenchRecord)) -> Result<Vec<BenchRecord>, BenchError> {
    cfg.validate()?;
    let executor = Executor::new(cfg.thread_mode())?;
    if let Some(&n0) = cfg.n_values.first() {
        let warm = BenchConfig { repetitions: 1, ..cfg.clone() };
        run_benchmark_with(&warm, n0, &executor)?;
    }
    let mut records = Vec::new();
    for &n in &cfg.n_values {
        let r = run_benchmark_with(cfg, n, &executor)?;
        on_record(&r);
        let stop = !r.outcome.is_ok();
        records.push(r);
        if stop {
            break;
        }
    }
    Ok(records)
}

/// Ascending sweep over `cfg.n_values`, stopping after the first resource
/// failure.
pub fn sweep(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    sweep_with(cfg, |_| {})
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    task: TaskKind,
    n: usize,
    precision: Precision,
    threads: usize,
    repetitions: usize,
    wall_seconds: Option<f64>,
    outcome: Outcome,
    gate_total: usize,
    seed: u64,
    timestamp: f64,
}

/// CSV with the config as a leading `# config: {json}` line.
pub fn write_csv<W: Write>(mut w: W, cfg: &BenchConfig, records: &[BenchRecord]) -> Result<(), BenchError> {
    writeln!(w, "# config: {}", serde_json::to_string(cfg)?)?;
    let mut out = csv::Writer::from_writer(w);
    if records.is_empty() {
        out.write_record(CSV_HEADER)?;
    }
    for r in records {
        out.serialize(CsvRow {
            task: r.task,
            n: r.n,
            precision: r.precision,
            threads: r.threads,
            repetitions: r.repetitions,
            wall_seconds: r.wall_seconds,
            outcome: r.outcome,
            gate_total: r.gate_total,
            seed: r.seed,
            timestamp: r.timestamp,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Reads records and, when present, the embedded config.
pub fn read_csv<R: Read>(r: R) -> Result<(Option<BenchConfig>, Vec<BenchRecord>), BenchError> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text)?;
    let mut config = None;
    for line in text.lines().filter(|l| l.starts_with('#')) {
        if let Some(json) = line.strip_prefix("# config:") {
            config = Some(serde_json::from_str(json.trim())?);
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut records = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row?;
        records.push(BenchRecord {
            task: row.task,
            n: row.n,
            precision: row.precision,
            threads: row.threads,
            repetitions: row.repetitions,
            wall_seconds: row.wall_seconds,
            outcome: row.outcome,
            gate_total: row.gate_total,
            seed: row.seed,
            timestamp: row.timestamp,
            gate_index: None,
        });
    }
    Ok((config, records))
}

#[derive(Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub records: Vec<BenchRecord>,
}

/// JSON mirror of [`write_csv`].
pub fn to_json(cfg: &BenchConfig, records: &[BenchRecord]) -> Result<String, BenchError> {
    let report = BenchReport { config: cfg.clone(), records: records.to_vec() };
    Ok(serde_json::to_string_pretty(&report)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qft_small_is_ok() {
        let cfg = BenchConfig::new(TaskKind::Qft, vec![4]);
        let r = run_benchmark(&cfg, 4).unwrap();
        assert_eq!(r.outcome, Outcome::Ok);
        assert!(r.wall_seconds.unwrap() > 0.0);
        assert_eq!(r.gate_total, 4 + 6 + 2);
        assert_eq!(r.threads, 1);
    }

    #[test]
    fn memory_limit_before_execution() {
        let cfg = BenchConfig {
            memory_budget: MemoryBudget::mib(1),
            ..BenchConfig::new(TaskKind::Heisenberg, vec![17])
        };
        let r = run_benchmark(&cfg, 17).unwrap();
        assert_eq!(r.outcome, Outcome::MemoryLimit);
        assert_eq!(r.wall_seconds, None);
    }

    #[test]
    fn design_limit() {
        let cfg = BenchConfig::new(TaskKind::Qft, vec![49]);
        assert_eq!(run_benchmark(&cfg, 49).unwrap().outcome, Outcome::DesignLimit);
    }

    #[test]
    fn zero_deadline_is_time_limit() {
        let cfg = BenchConfig { deadline_seconds: Some(0.0), ..BenchConfig::new(TaskKind::Heisenberg, vec![6]) };
        let r = run_benchmark(&cfg, 6).unwrap();
        assert_eq!(r.outcome, Outcome::TimeLimit);
        assert_eq!(r.gate_index, Some(0));
    }

    #[test]
    fn sweep_stops_at_first_failure() {
        let cfg = BenchConfig {
            memory_budget: MemoryBudget::bytes(MemoryBudget::required_bytes(7, Precision::Double) as u64),
            repetitions: 1,
            ..BenchConfig::new(TaskKind::Qft, vec![4, 6, 8, 10])
        };
        let rs = sweep(&cfg).unwrap();
        let got: Vec<(usize, Outcome)> = rs.iter().map(|r| (r.n, r.outcome)).collect();
        assert_eq!(got, vec![(4, Outcome::Ok), (6, Outcome::Ok), (8, Outcome::MemoryLimit)]);
    }

    #[test]
    fn config_rules() {
        let mut cfg = BenchConfig::new(TaskKind::Qft, vec![4, 4]);
        assert!(cfg.validate().is_err());
        cfg.n_values = vec![4, 6];
        cfg.repetitions = 0;
        assert!(cfg.validate().is_err());
        cfg.repetitions = 1;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn csv_round_trip() {
        let cfg = BenchConfig { repetitions: 1, ..BenchConfig::new(TaskKind::Qft, vec![3, 5]) };
        let mut rs = sweep(&cfg).unwrap();
        rs.push(BenchRecord { n: 60, outcome: Outcome::DesignLimit, wall_seconds: None, ..rs[0].clone() });
        let mut buf = Vec::new();
        write_csv(&mut buf, &cfg, &rs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config: {"));
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let (back_cfg, back) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back_cfg, Some(cfg.clone()));
        assert_eq!(back, rs);
        let json: serde_json::Value = serde_json::from_str(&to_json(&cfg, &rs).unwrap()).unwrap();
        assert_eq!(json["records"].as_array().unwrap().len(), 3);
        assert_eq!(json["records"][2]["outcome"], "DesignLimit");
    }
}
