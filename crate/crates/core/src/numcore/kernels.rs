//! Dense kernels on raw row-major slices.
//!
//! Parallel variants split on fixed row or batch boundaries and reduce partial
//! sums in index order, so they agree bit-for-bit with the sequential path.

use crate::par::{self, Parallelism};

const ROWS_PER_TASK: usize = 64;
const REDUCE_BLOCK: usize = 512;
const BATCH_PER_TASK: usize = 32;

/// `out[m×n] = a[m×k] · b[k×n]` for one small matrix, overwriting `out`.
pub(crate) fn gemm_nn_into(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    out[..m * n].fill(0.0);
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (c, &bv) in row.iter_mut().zip(brow) {
                *c += av * bv;
            }
        }
    }
}

/// `out[m×n] = a[m×k] · b[n×k]ᵀ`.
pub(crate) fn gemm_nt_into(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            out[i * n + j] = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
}

/// `out[k×n] += a[m×k]ᵀ · b[m×n]`.
pub(crate) fn gemm_tn_acc(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for r in 0..m {
        let arow = &a[r * k..(r + 1) * k];
        let brow = &b[r * n..(r + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

pub(crate) fn matmul(par: Parallelism, a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    par::chunks_mut(par, &mut out, ROWS_PER_TASK * n, |ci, chunk| {
        let r0 = ci * ROWS_PER_TASK;
        let rows = chunk.len() / n;
        gemm_nn_into(&a[r0 * k..(r0 + rows) * k], b, rows, k, n, chunk);
    });
    out
}

pub(crate) fn matmul_nt(par: Parallelism, a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    par::chunks_mut(par, &mut out, ROWS_PER_TASK * n, |ci, chunk| {
        let r0 = ci * ROWS_PER_TASK;
        let rows = chunk.len() / n;
        gemm_nt_into(&a[r0 * k..(r0 + rows) * k], b, rows, k, n, chunk);
    });
    out
}

/// `a[m×k]ᵀ · b[m×n]`, reduced over fixed row blocks.
pub(crate) fn matmul_tn(par: Parallelism, a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let blocks = m.div_ceil(REDUCE_BLOCK).max(1);
    if blocks == 1 {
        let mut out = vec![0.0; k * n];
        gemm_tn_acc(a, b, m, k, n, &mut out);
        return out;
    }
    let partials = par::map_indices(par, blocks, |bi| {
        let r0 = bi * REDUCE_BLOCK;
        let r1 = (r0 + REDUCE_BLOCK).min(m);
        let mut part = vec![0.0; k * n];
        gemm_tn_acc(&a[r0 * k..r1 * k], &b[r0 * n..r1 * n], r1 - r0, k, n, &mut part);
        part
    });
    let mut iter = partials.into_iter();
    let mut out = iter.next().expect("at least one block");
    for part in iter {
        for (o, p) in out.iter_mut().zip(part) {
            *o += p;
        }
    }
    out
}

/// Column sums of `a[m×n]` with the same fixed-block reduction as [`matmul_tn`].
pub(crate) fn column_sums(par: Parallelism, a: &[f64], m: usize, n: usize) -> Vec<f64> {
    let blocks = m.div_ceil(REDUCE_BLOCK).max(1);
    let partials = par::map_indices(par, blocks, |bi| {
        let r0 = bi * REDUCE_BLOCK;
        let r1 = (r0 + REDUCE_BLOCK).min(m);
        let mut part = vec![0.0; n];
        for r in r0..r1 {
            for (p, &v) in part.iter_mut().zip(&a[r * n..(r + 1) * n]) {
                *p += v;
            }
        }
        part
    });
    let mut iter = partials.into_iter();
    let mut out = iter.next().unwrap_or_else(|| vec![0.0; n]);
    for part in iter {
        for (o, p) in out.iter_mut().zip(part) {
            *o += p;
        }
    }
    out
}

/// Sum of a slice in fixed blocks.
pub(crate) fn sum(par: Parallelism, a: &[f64]) -> f64 {
    let blocks = a.len().div_ceil(REDUCE_BLOCK * 8).max(1);
    let partials = par::map_indices(par, blocks, |bi| {
        let r0 = bi * REDUCE_BLOCK * 8;
        let r1 = (r0 + REDUCE_BLOCK * 8).min(a.len());
        a[r0..r1].iter().sum::<f64>()
    });
    partials.into_iter().sum()
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum BatchKind {
    /// `a[m×k] · b[k×n]`
    NN,
    /// `a[m×k] · b[n×k]ᵀ`
    NT,
    /// `a[m×k]ᵀ · b[m×n]`, producing `[k×n]`
    TN,
}

/// Batched small-matrix product. `dims = (m, k, n)` describe the per-item
/// product in the orientation named by `kind`.
pub(crate) fn batched(
    par: Parallelism,
    kind: BatchKind,
    a: &[f64],
    b: &[f64],
    batch: usize,
    (m, k, n): (usize, usize, usize),
) -> Vec<f64> {
    let (a_sz, b_sz, o_rows, o_cols) = match kind {
        BatchKind::NN => (m * k, k * n, m, n),
        BatchKind::NT => (m * k, n * k, m, n),
        BatchKind::TN => (m * k, m * n, k, n),
    };
    let o_sz = o_rows * o_cols;
    let mut out = vec![0.0; batch * o_sz];
    par::chunks_mut(par, &mut out, BATCH_PER_TASK * o_sz, |ci, chunk| {
        let b0 = ci * BATCH_PER_TASK;
        for (j, o) in chunk.chunks_mut(o_sz).enumerate() {
            let bi = b0 + j;
            let aa = &a[bi * a_sz..(bi + 1) * a_sz];
            let bb = &b[bi * b_sz..(bi + 1) * b_sz];
            match kind {
                BatchKind::NN => gemm_nn_into(aa, bb, m, k, n, o),
                BatchKind::NT => gemm_nt_into(aa, bb, m, k, n, o),
                BatchKind::TN => {
                    o.fill(0.0);
                    gemm_tn_acc(aa, bb, m, k, n, o)
                }
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    fn transpose(a: &[f64], r: usize, c: usize) -> Vec<f64> {
        let mut t = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                t[j * r + i] = a[i * c + j];
            }
        }
        t
    }

    fn random(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn all_orientations_match_naive_product() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (m, k, n) = (1100, 7, 5);
        let a = random(&mut rng, m * k);
        let b = random(&mut rng, k * n);
        let expect = naive(&a, &b, m, k, n);
        for par in [Parallelism::Sequential, Parallelism::Parallel] {
            let nn = matmul(par, &a, &b, m, k, n);
            let nt = matmul_nt(par, &a, &transpose(&b, k, n), m, k, n);
            for ((x, y), z) in nn.iter().zip(&nt).zip(&expect) {
                assert!((x - z).abs() < 1e-12 && (y - z).abs() < 1e-12);
            }
            let at = transpose(&a, m, k);
            let c = random(&mut rng, m * n);
            let tn = matmul_tn(par, &a, &c, m, k, n);
            let expect_tn = naive(&at, &c, k, m, n);
            for (x, z) in tn.iter().zip(&expect_tn) {
                assert!((x - z).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn parallel_and_sequential_are_bit_identical() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let (m, k, n) = (3000, 16, 9);
        let a = random(&mut rng, m * k);
        let c = random(&mut rng, m * n);
        let s = matmul_tn(Parallelism::Sequential, &a, &c, m, k, n);
        let p = matmul_tn(Parallelism::Parallel, &a, &c, m, k, n);
        assert_eq!(s, p);
        assert_eq!(
            column_sums(Parallelism::Sequential, &c, m, n),
            column_sums(Parallelism::Parallel, &c, m, n)
        );
        assert_eq!(sum(Parallelism::Sequential, &a), sum(Parallelism::Parallel, &a));
    }

    #[test]
    fn batched_matches_per_item_naive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (bt, m, k, n) = (70, 4, 3, 5);
        let a = random(&mut rng, bt * m * k);
        let b = random(&mut rng, bt * k * n);
        let out = batched(Parallelism::Parallel, BatchKind::NN, &a, &b, bt, (m, k, n));
        for i in 0..bt {
            let e = naive(&a[i * m * k..(i + 1) * m * k], &b[i * k * n..(i + 1) * k * n], m, k, n);
            for (x, y) in out[i * m * n..(i + 1) * m * n].iter().zip(&e) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
