//! Log-linear scaling fits `ln t = a + b N` and per-N speedup ratios.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::BenchRecord;

/// Fewest points a fit accepts.
pub const MIN_POINTS: usize = 4;
/// Points kept when the automatic window is too short.
pub const FALLBACK_POINTS: usize = 5;
/// The automatic window starts at the first time at or above this.
pub const AUTO_WINDOW_SECONDS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("InsufficientPoints: {found} usable points, need at least {needed}")]
    InsufficientPoints { found: usize, needed: usize },
    #[error("NoOverlap: the record sets share no N with OK outcomes")]
    NoOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WindowStart {
    /// First N with `t >= 1 s`, or the largest five points.
    #[default]
    Auto,
    Min(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub n_window: (usize, usize),
    pub points_used: usize,
    pub r_squared: f64,
}

/// Ordinary least squares of `ln t` on `n`.
fn ols(points: &[(usize, f64)]) -> ScalingFit {
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let b = sxy / sxx;
    let a = ybar - b * xbar;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let s2 = ssr / (m - 2.0);
    ScalingFit {
        a,
        b,
        stderr_a: (s2 * (1.0 / m + xbar * xbar / sxx)).sqrt(),
        stderr_b: (s2 / sxx).sqrt(),
        n_window: (points[0].0, points[points.len() - 1].0),
        points_used: points.len(),
        r_squared: if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 },
    }
}

/// Fits `(n, seconds)` pairs. Repeated N keep their smallest time;
/// non-positive or non-finite times are dropped.
pub fn fit_points(points: &[(usize, f64)], start: WindowStart) -> Result<ScalingFit, AnalysisError> {
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for &(n, t) in points.iter().filter(|p| p.1.is_finite() && p.1 > 0.0) {
        best.entry(n).and_modify(|v| *v = v.min(t)).or_insert(t);
    }
    let all: Vec<(usize, f64)> = best.into_iter().collect();
    let window: Vec<(usize, f64)> = match start {
        WindowStart::Min(n_min) => all.iter().copied().filter(|p| p.0 >= n_min).collect(),
        WindowStart::Auto => {
            let from = all.iter().position(|p| p.1 >= AUTO_WINDOW_SECONDS).unwrap_or(all.len());
            if all.len() - from >= MIN_POINTS {
                all[from..].to_vec()
            } else {
                all[all.len().saturating_sub(FALLBACK_POINTS)..].to_vec()
            }
        }
    };
    if window.len() < MIN_POINTS {
        return Err(AnalysisError::InsufficientPoints { found: window.len(), needed: MIN_POINTS });
    }
    Ok(ols(&window))
}

/// Fits the OK records of one configuration.
pub fn fit_scaling(records: &[BenchRecord], start: WindowStart) -> Result<ScalingFit, AnalysisError> {
    let points: Vec<(usize, f64)> = records
        .iter()
        .filter(|r| r.outcome.is_ok())
        .filter_map(|r| r.wall_seconds.map(|t| (r.n, t)))
        .collect();
    fit_points(&points, start)
}

fn ok_times(records: &[BenchRecord]) -> BTreeMap<usize, f64> {
    let mut m = BTreeMap::new();
    for r in records.iter().filter(|r| r.outcome.is_ok()) {
        if let Some(t) = r.wall_seconds {
            m.entry(r.n).and_modify(|v: &mut f64| *v = v.min(t)).or_insert(t);
        }
    }
    m
}

/// `t_base(N) / t_other(N)` at every N where both have an OK time.
pub fn speedup_ratio(base: &[BenchRecord], other: &[BenchRecord]) -> Result<BTreeMap<usize, f64>, AnalysisError> {
    let b = ok_times(base);
    let o = ok_times(other);
    let ratios: BTreeMap<usize, f64> =
        b.iter().filter_map(|(n, tb)| o.get(n).map(|to| (*n, tb / to))).collect();
    if ratios.is_empty() {
        return Err(AnalysisError::NoOverlap);
    }
    Ok(ratios)
}
