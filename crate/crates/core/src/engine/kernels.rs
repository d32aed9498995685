//! Index-based gate kernels.
//!
//! A one-qubit gate on bit `t` touches `2^(N-1)` pairs `(i, i + 2^t)`; a
//! two-qubit gate on bits `l < h` touches `2^(N-2)` quadruples. Both are
//! walked as slices: the state splits into blocks of `2^(t+1)` whose lower
//! and upper halves are zipped elementwise. Parallel runs hand whole blocks
//! (or, for high target bits, aligned sub-slices of both halves) to the
//! workers, so every pair or quadruple is owned by exactly one worker and
//! the arithmetic per amplitude is the same for any worker count.

use num_complex::{Complex, Complex64};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::circuit::{GateKind, GateMatrix, GateOp};

/// Below this many amplitudes kernels always run serially.
pub(crate) const PARALLEL_MIN_LEN: usize = 1 << 14;

/// Amplitude storage type. Arithmetic always happens in double precision;
/// single-precision storage rounds once per store.
pub(crate) trait Real: Copy + Send + Sync + 'static {
    fn widen(z: Complex<Self>) -> Complex64;
    fn narrow(z: Complex64) -> Complex<Self>;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    #[inline(always)]
    fn widen(z: Complex<f32>) -> Complex64 {
        Complex64::new(z.re as f64, z.im as f64)
    }

    #[inline(always)]
    fn narrow(z: Complex64) -> Complex<f32> {
        Complex::new(z.re as f32, z.im as f32)
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline(always)]
    fn widen(z: Complex64) -> Complex64 {
        z
    }

    #[inline(always)]
    fn narrow(z: Complex64) -> Complex64 {
        z
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// Workers available to a kernel call.
#[derive(Clone, Copy)]
pub(crate) struct Workers<'a> {
    pub pool: &'a ThreadPool,
    pub count: usize,
}

/// A gate lowered to the cheapest kernel for its structure. Two-qubit data
/// is indexed in the basis `2 * bit(hi) + bit(lo)`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Prepared {
    Diag1 { t: usize, d: [Complex64; 2] },
    Phase1 { t: usize, phase: Complex64 },
    Dense1 { t: usize, m: [[Complex64; 2]; 2] },
    Phase2 { lo: usize, hi: usize, phase: Complex64 },
    Swap2 { lo: usize, hi: usize, a: usize, b: usize },
    Dense2 { lo: usize, hi: usize, m: [[Complex64; 4]; 4] },
}

impl Prepared {
    pub fn new(op: &GateOp) -> Self {
        match op.matrix() {
            GateMatrix::One(m) => {
                let t = op.qubits[0];
                match op.kind {
                    GateKind::P | GateKind::Z => Prepared::Phase1 { t, phase: m[1][1] },
                    GateKind::RZ => Prepared::Diag1 { t, d: [m[0][0], m[1][1]] },
                    _ => Prepared::Dense1 { t, m },
                }
            }
            GateMatrix::Two(m) => {
                let (q0, q1) = (op.qubits[0], op.qubits[1]);
                let (lo, hi) = (q0.min(q1), q0.max(q1));
                // canonical index 2*bit(hi)+bit(lo) -> gate index 2*bit(q0)+bit(q1)
                let perm: [usize; 4] = if q0 == hi { [0, 1, 2, 3] } else { [0, 2, 1, 3] };
                let mut mc = [[Complex64::new(0.0, 0.0); 4]; 4];
                for r in 0..4 {
                    for col in 0..4 {
                        mc[r][col] = m[perm[r]][perm[col]];
                    }
                }
                match op.kind {
                    GateKind::CZ | GateKind::CP => Prepared::Phase2 { lo, hi, phase: mc[3][3] },
                    GateKind::CX | GateKind::SWAP => {
                        let moved: Vec<usize> = (0..4).filter(|&k| mc[k][k].norm() == 0.0).collect();
                        Prepared::Swap2 { lo, hi, a: moved[0], b: moved[1] }
                    }
                    _ => Prepared::Dense2 { lo, hi, m: mc },
                }
            }
        }
    }

    pub fn apply<T: Real>(&self, state: &mut [Complex<T>], workers: Option<Workers<'_>>) {
        let workers = workers.filter(|_| state.len() >= PARALLEL_MIN_LEN);
        let scale = |s: &mut [Complex<T>], by: Complex64| {
            s.iter_mut().for_each(|x| *x = T::narrow(T::widen(*x) * by));
        };
        match *self {
            Prepared::Diag1 { t, d } => visit_pairs(state, t, workers, &|lo, hi| {
                scale(lo, d[0]);
                scale(hi, d[1]);
            }),
            Prepared::Phase1 { t, phase } => visit_pairs(state, t, workers, &|_, hi| scale(hi, phase)),
            Prepared::Dense1 { t, m } => visit_pairs(state, t, workers, &|lo, hi| {
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (a, b) = (T::widen(*x), T::widen(*y));
                    *x = T::narrow(m[0][0] * a + m[0][1] * b);
                    *y = T::narrow(m[1][0] * a + m[1][1] * b);
                }
            }),
            Prepared::Phase2 { lo, hi, phase } => visit_quads(state, lo, hi, workers, &|q| scale(q[3], phase)),
            Prepared::Swap2 { lo, hi, a, b } => visit_quads(state, lo, hi, workers, &|mut q| {
                let (first, second) = q.split_at_mut(b);
                first[a].swap_with_slice(second[0]);
            }),
            Prepared::Dense2 { lo, hi, m } => visit_quads(state, lo, hi, workers, &|q| {
                let [a0, a1, b0, b1] = q;
                for (((w, x), y), z) in
                    a0.iter_mut().zip(a1.iter_mut()).zip(b0.iter_mut()).zip(b1.iter_mut())
                {
                    let v = [T::widen(*w), T::widen(*x), T::widen(*y), T::widen(*z)];
                    let row = |r: usize| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
                    *w = T::narrow(row(0));
                    *x = T::narrow(row(1));
                    *y = T::narrow(row(2));
                    *z = T::narrow(row(3));
                }
            }),
        }
    }
}

/// Calls `f(lo, hi)` on aligned slices where `hi[k]` is `lo[k]` with bit `t` set.
pub(crate) fn visit_pairs<C, F>(state: &mut [C], t: usize, workers: Option<Workers<'_>>, f: &F)
where
    C: Send,
    F: Fn(&mut [C], &mut [C]) + Sync,
{
    let half = 1usize << t;
    let block = half << 1;
    let serial = |chunk: &mut [C]| {
        for b in chunk.chunks_exact_mut(block) {
            let (lo, hi) = b.split_at_mut(half);
            f(lo, hi);
        }
    };
    let Some(w) = workers else {
        serial(state);
        return;
    };
    let nblocks = state.len() / block;
    if nblocks >= w.count {
        let chunk = nblocks.div_ceil(w.count) * block;
        w.pool.install(|| state.par_chunks_mut(chunk).for_each(serial));
    } else {
        let piece = half.div_ceil(w.count.div_ceil(nblocks));
        let units: Vec<(&mut [C], &mut [C])> = state
            .chunks_exact_mut(block)
            .flat_map(|b| {
                let (lo, hi) = b.split_at_mut(half);
                lo.chunks_mut(piece).zip(hi.chunks_mut(piece))
            })
            .collect();
        w.pool.install(|| units.into_par_iter().for_each(|(lo, hi)| f(lo, hi)));
    }
}

/// Calls `f([q00, q01, q10, q11])` on aligned slices, indexed by
/// `2 * bit(h) + bit(l)`; requires `l < h`.
pub(crate) fn visit_quads<C, F>(state: &mut [C], l: usize, h: usize, workers: Option<Workers<'_>>, f: &F)
where
    C: Send,
    F: Fn([&mut [C]; 4]) + Sync,
{
    debug_assert!(l < h);
    let hh = 1usize << h;
    let hblock = hh << 1;
    let lh = 1usize << l;
    let lblock = lh << 1;
    let inner = |a: &mut [C], b: &mut [C]| {
        for (ca, cb) in a.chunks_exact_mut(lblock).zip(b.chunks_exact_mut(lblock)) {
            let (a0, a1) = ca.split_at_mut(lh);
            let (b0, b1) = cb.split_at_mut(lh);
            f([a0, a1, b0, b1]);
        }
    };
    let serial = |chunk: &mut [C]| {
        for blk in chunk.chunks_exact_mut(hblock) {
            let (a, b) = blk.split_at_mut(hh);
            inner(a, b);
        }
    };
    let Some(w) = workers else {
        serial(state);
        return;
    };
    let nblocks = state.len() / hblock;
    if nblocks >= w.count {
        let chunk = nblocks.div_ceil(w.count) * hblock;
        w.pool.install(|| state.par_chunks_mut(chunk).for_each(serial));
        return;
    }
    let per_block = w.count.div_ceil(nblocks);
    let subs = hh / lblock;
    if subs >= per_block {
        let piece = subs.div_ceil(per_block) * lblock;
        let units: Vec<(&mut [C], &mut [C])> = state
            .chunks_exact_mut(hblock)
            .flat_map(|blk| {
                let (a, b) = blk.split_at_mut(hh);
                a.chunks_mut(piece).zip(b.chunks_mut(piece))
            })
            .collect();
        w.pool.install(|| units.into_par_iter().for_each(|(a, b)| inner(a, b)));
    } else {
        let piece = lh.div_ceil(per_block.div_ceil(subs));
        let units: Vec<[&mut [C]; 4]> = state
            .chunks_exact_mut(hblock)
            .flat_map(|blk| {
                let (a, b) = blk.split_at_mut(hh);
                a.chunks_exact_mut(lblock).zip(b.chunks_exact_mut(lblock))
            })
            .flat_map(|(ca, cb)| {
                let (a0, a1) = ca.split_at_mut(lh);
                let (b0, b1) = cb.split_at_mut(lh);
                a0.chunks_mut(piece)
                    .zip(a1.chunks_mut(piece))
                    .zip(b0.chunks_mut(piece))
                    .zip(b1.chunks_mut(piece))
                    .map(|(((w, x), y), z)| [w, x, y, z])
            })
            .collect();
        w.pool.install(|| units.into_par_iter().for_each(|q| f(q)));
    }
}
