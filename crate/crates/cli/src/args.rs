use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use qsv_core::{HeisenbergParams, MemoryBudget, Precision, RqcParams, TaskKind, ThreadMode, WindowStart};

#[derive(Parser, Debug)]
#[command(name = "qsv", version, about = "Statevector simulator and benchmarking harness")]
pub struct Cli {
    /// JSON file supplying defaults for any flag (flags win)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a task circuit as OpenQASM 2.0
    Gen {
        #[arg(long)]
        task: Option<TaskKind>,
        #[arg(long)]
        n: Option<usize>,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: TaskArgs,
    },
    /// Execute a QASM file and print <Z_i> and the norm
    Run {
        file: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Time a task over a range of register sizes
    Bench {
        #[arg(long)]
        task: Option<TaskKind>,
        /// Sizes as `start:stop:step`, `start:stop`, `a,b,c` or a single N
        #[arg(long = "n", value_name = "RANGE")]
        n_range: Option<String>,
        #[arg(long)]
        repetitions: Option<usize>,
        /// CSV output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the records as JSON
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        params: TaskArgs,
    },
    /// Fit ln t = a + b N to a benchmark CSV
    Fit {
        file: PathBuf,
        /// Window start: `auto` or a qubit count
        #[arg(long)]
        nmin: Option<String>,
        /// JSON output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy checks, one JSON report per line
    Validate {
        #[command(subcommand)]
        check: Check,
    },
}

#[derive(Subcommand, Debug)]
pub enum Check {
    /// log10(sum |<Z_i>|)/N after the QFT of |0...0>
    Qft {
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        engine: EngineArgs,
        /// Pass threshold; defaults depend on precision
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// log10(sum |<Z_i>_a - <Z_i>_b|) between two engine configurations
    Delta {
        #[arg(long)]
        task: Option<TaskKind>,
        #[arg(long)]
        n: Option<usize>,
        /// First configuration as `precision:threads`
        #[arg(long, default_value = "single:1")]
        a: String,
        /// Second configuration as `precision:threads`
        #[arg(long, default_value = "double:1")]
        b: String,
        #[command(flatten)]
        params: TaskArgs,
    },
    /// Engine state against the dense embedding oracle
    Oracle {
        #[arg(long)]
        task: Option<TaskKind>,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        params: TaskArgs,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct EngineArgs {
    #[arg(long)]
    pub precision: Option<Precision>,
    /// Worker count; 1 runs single-threaded. Default: QSV_THREADS or all cores
    #[arg(long)]
    pub threads: Option<usize>,
    /// Per-run deadline in seconds
    #[arg(long)]
    pub deadline: Option<f64>,
    /// Amplitude memory budget, e.g. `1MiB`, `4GiB`, `65536`
    #[arg(long = "memory-budget", value_name = "SIZE")]
    pub memory_budget: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TaskArgs {
    #[arg(long, help_heading = "Heisenberg")]
    pub jx: Option<f64>,
    #[arg(long, help_heading = "Heisenberg")]
    pub jy: Option<f64>,
    #[arg(long, help_heading = "Heisenberg")]
    pub jz: Option<f64>,
    #[arg(long, help_heading = "Heisenberg")]
    pub hz: Option<f64>,
    #[arg(long, help_heading = "Heisenberg")]
    pub dt: Option<f64>,
    #[arg(long, help_heading = "Heisenberg")]
    pub tf: Option<f64>,
    #[arg(long, help_heading = "Random circuit")]
    pub seed: Option<u64>,
    #[arg(long, help_heading = "Random circuit")]
    pub cycles: Option<usize>,
    #[arg(long, help_heading = "Random circuit")]
    pub theta: Option<f64>,
    #[arg(long, help_heading = "Random circuit")]
    pub phi: Option<f64>,
    /// Grid shape as `ROWSxCOLS`
    #[arg(long, help_heading = "Random circuit")]
    pub grid: Option<String>,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub task: Option<TaskKind>,
    pub n: Option<serde_json::Value>,
    pub precision: Option<Precision>,
    pub threads: Option<usize>,
    pub repetitions: Option<usize>,
    pub deadline: Option<f64>,
    pub memory_budget: Option<serde_json::Value>,
    pub nmin: Option<serde_json::Value>,
    pub jx: Option<f64>,
    pub jy: Option<f64>,
    pub jz: Option<f64>,
    pub hz: Option<f64>,
    pub dt: Option<f64>,
    pub tf: Option<f64>,
    pub seed: Option<u64>,
    pub cycles: Option<usize>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub grid: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `n` as a string for the range parser.
    pub fn n_text(&self) -> Option<String> {
        self.n.as_ref().map(json_text)
    }

    pub fn memory_budget_text(&self) -> Option<String> {
        self.memory_budget.as_ref().map(json_text)
    }

    pub fn nmin_text(&self) -> Option<String> {
        self.nmin.as_ref().map(json_text)
    }
}

fn json_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(items) => items.iter().map(json_text).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

/// Engine settings after merging flags, file and defaults.
#[derive(Debug, Clone, Serialize)]
pub struct EngineConfig {
    pub precision: Precision,
    pub threads: usize,
    pub deadline_seconds: Option<f64>,
    pub memory_budget: MemoryBudget,
}

impl EngineConfig {
    pub fn resolve(args: &EngineArgs, file: &FileConfig) -> Result<Self> {
        let threads = args.threads.or(file.threads).unwrap_or_else(ThreadMode::default_workers);
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        let deadline_seconds = args.deadline.or(file.deadline);
        if let Some(d) = deadline_seconds {
            if !(d >= 0.0 && d.is_finite()) {
                bail!("--deadline must be a non-negative number of seconds");
            }
        }
        let memory_budget = match args.memory_budget.clone().or_else(|| file.memory_budget_text()) {
            Some(text) => parse_size(&text)?,
            None => MemoryBudget::unlimited(),
        };
        Ok(EngineConfig {
            precision: args.precision.or(file.precision).unwrap_or(Precision::Double),
            threads,
            deadline_seconds,
            memory_budget,
        })
    }

    pub fn thread_mode(&self) -> ThreadMode {
        ThreadMode::from_workers(self.threads)
    }
}

/// Task parameter records after merging flags, file and defaults.
pub fn resolve_params(args: &TaskArgs, file: &FileConfig) -> Result<(HeisenbergParams, RqcParams)> {
    let d = HeisenbergParams::default();
    let h = HeisenbergParams {
        jx: args.jx.or(file.jx).unwrap_or(d.jx),
        jy: args.jy.or(file.jy).unwrap_or(d.jy),
        jz: args.jz.or(file.jz).unwrap_or(d.jz),
        hz: args.hz.or(file.hz).unwrap_or(d.hz),
        dt: args.dt.or(file.dt).unwrap_or(d.dt),
        tf: args.tf.or(file.tf).unwrap_or(d.tf),
    };
    let r = RqcParams::default();
    let grid = match args.grid.clone().or_else(|| file.grid.clone()) {
        Some(g) => Some(parse_grid(&g)?),
        None => None,
    };
    let rqc = RqcParams {
        seed: args.seed.or(file.seed).unwrap_or(r.seed),
        cycles: args.cycles.or(file.cycles).unwrap_or(r.cycles),
        theta: args.theta.or(file.theta).unwrap_or(r.theta),
        phi: args.phi.or(file.phi).unwrap_or(r.phi),
        grid,
    };
    Ok((h, rqc))
}

pub fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.with_context(|| format!("missing required --{flag}"))
}

fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let (r, c) = text
        .split_once(['x', 'X'])
        .with_context(|| format!("grid `{text}` is not of the form ROWSxCOLS"))?;
    Ok((r.trim().parse()?, c.trim().parse()?))
}

/// `start:stop:step` (stop included when reached), `start:stop`, a comma
/// list, or one value.
pub fn parse_range(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let num = |s: &str| -> Result<usize> {
        s.trim().parse::<usize>().with_context(|| format!("`{s}` is not a non-negative integer"))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let (start, stop, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => bail!("range `{text}` must be start:stop or start:stop:step"),
        };
        if step == 0 {
            bail!("range step must be positive");
        }
        if stop < start {
            bail!("range `{text}` is empty");
        }
        return Ok((start..=stop).step_by(step).collect());
    }
    text.split(',').map(num).collect()
}

/// Byte count with optional `KiB`/`MiB`/`GiB` (or `K`/`M`/`G`) suffix, or `unlimited`.
pub fn parse_size(text: &str) -> Result<MemoryBudget> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("unlimited") {
        return Ok(MemoryBudget::unlimited());
    }
    let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (digits, unit) = t.split_at(split);
    let value: u64 = digits.parse().with_context(|| format!("memory budget `{text}` has no byte count"))?;
    let shift = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 0,
        "k" | "kib" => 10,
        "m" | "mib" => 20,
        "g" | "gib" => 30,
        "t" | "tib" => 40,
        other => bail!("unknown size unit `{other}`"),
    };
    value
        .checked_mul(1u64 << shift)
        .map(MemoryBudget::bytes)
        .with_context(|| format!("memory budget `{text}` overflows"))
}

pub fn parse_window(text: Option<&str>) -> Result<WindowStart> {
    match text.map(str::trim) {
        None | Some("auto") => Ok(WindowStart::Auto),
        Some(n) => Ok(WindowStart::Min(n.parse().with_context(|| format!("--nmin `{n}` is neither auto nor a qubit count"))?)),
    }
}

/// `precision:threads`, e.g. `single:1`, `double:8`.
pub fn parse_engine_pair(text: &str) -> Result<(Precision, usize)> {
    let (p, t) = text.split_once(':').unwrap_or((text, "1"));
    let precision: Precision = p.parse().map_err(anyhow::Error::msg)?;
    let threads: usize = t.trim().parse().with_context(|| format!("`{t}` is not a worker count"))?;
    if threads == 0 {
        bail!("worker count in `{text}` must be at least 1");
    }
    Ok((precision, threads))
}
