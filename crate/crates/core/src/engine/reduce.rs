//! Double-precision reductions over amplitudes with a fixed summation tree.
//!
//! The state is cut into leaves of [`LEAF`] amplitudes. Each leaf is summed
//! left to right; leaf partials are then combined pairwise by halving the
//! index range. The tree depends only on the state length, so any worker
//! count produces the same bits.

use num_complex::Complex;
use rayon::prelude::*;

use super::kernels::{Real, Workers};

pub(crate) const LEAF: usize = 1 << 10;

/// Pairwise sum over a fixed binary tree.
pub(crate) fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len => {
            let (a, b) = values.split_at(len / 2);
            tree_sum(a) + tree_sum(b)
        }
    }
}

/// Elementwise pairwise sum of equal-length vectors over the same tree as [`tree_sum`].
pub(crate) fn tree_sum_vecs(values: &[Vec<f64>]) -> Vec<f64> {
    match values.len() {
        0 => Vec::new(),
        1 => values[0].clone(),
        len => {
            let (a, b) = values.split_at(len / 2);
            let mut left = tree_sum_vecs(a);
            let right = tree_sum_vecs(b);
            left.iter_mut().zip(right).for_each(|(x, y)| *x += y);
            left
        }
    }
}

fn leaf_map<T, R, F>(amps: &[Complex<T>], workers: Option<Workers<'_>>, f: F) -> Vec<R>
where
    T: Real,
    R: Send,
    F: Fn(usize, &[Complex<T>]) -> R + Sync + Send,
{
    match workers {
        Some(w) if amps.len() > LEAF => w.pool.install(|| {
            amps.par_chunks(LEAF).enumerate().map(|(k, leaf)| f(k * LEAF, leaf)).collect()
        }),
        _ => amps.chunks(LEAF).enumerate().map(|(k, leaf)| f(k * LEAF, leaf)).collect(),
    }
}

fn prob<T: Real>(z: &Complex<T>) -> f64 {
    let (re, im) = (z.re.to_f64(), z.im.to_f64());
    re * re + im * im
}

pub(crate) fn norm_sqr<T: Real>(amps: &[Complex<T>], workers: Option<Workers<'_>>) -> f64 {
    let partials = leaf_map(amps, workers, |_, leaf| leaf.iter().fold(0.0, |acc, z| acc + prob(z)));
    tree_sum(&partials)
}

/// `<Z_i>` for every qubit `i < n`, as `P(bit i = 0) - P(bit i = 1)`.
pub(crate) fn expectation_z<T: Real>(amps: &[Complex<T>], n: usize, workers: Option<Workers<'_>>) -> Vec<f64> {
    let partials = leaf_map(amps, workers, |offset, leaf| {
        // bits that vary inside a leaf are summed per element; the rest are constant
        let inner_bits = (leaf.len().trailing_zeros() as usize).min(n);
        let mut total = 0.0;
        let mut split = vec![[0.0f64; 2]; inner_bits];
        for (j, z) in leaf.iter().enumerate() {
            let p = prob(z);
            total += p;
            for (i, acc) in split.iter_mut().enumerate() {
                acc[j >> i & 1] += p;
            }
        }
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            let (p0, p1) = if i < inner_bits {
                (split[i][0], split[i][1])
            } else if (offset >> i) & 1 == 1 {
                (0.0, total)
            } else {
                (total, 0.0)
            };
            out[i] = p0;
            out[n + i] = p1;
        }
        out
    });
    let sums = tree_sum_vecs(&partials);
    (0..n).map(|i| match (sums.get(i), sums.get(n + i)) {
        (Some(p0), Some(p1)) => p0 - p1,
        _ => 0.0,
    }).collect()
}
