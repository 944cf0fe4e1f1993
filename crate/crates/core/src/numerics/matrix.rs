//! Dense row-major matrices and the multiply kernels used throughout the crate.
//!
//! Every reduction sums in ascending index order, one term at a time, starting
//! from the existing accumulator value. The blocked kernel only changes which
//! outputs are computed together, never the order of the terms of any single
//! output, so it agrees bit-for-bit with a textbook triple loop.

use crate::error::{check_dims, Error, Result};

/// Dense matrix of `f64` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims("RealMatrix::from_vec", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. All rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dims("RealMatrix::from_rows", cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        transpose_into(self.rows, self.cols, &self.data, &mut t.data);
        t
    }

    /// Largest absolute entry; zero for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `max |a_ij - a_ji| / max |a_ij|`, or 0 for the zero matrix.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    /// Replaces the matrix by `(A + Aᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `m · v`.
pub fn matvec(m: &RealMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_dims("matvec", m.cols, v.len())?;
    Ok((0..m.rows)
        .map(|i| {
            let mut acc = 0.0;
            for (a, b) in m.row(i).iter().zip(v) {
                acc += a * b;
            }
            acc
        })
        .collect())
}

/// `a · b`.
pub fn matmul(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    check_dims("matmul", a.cols, b.rows)?;
    let mut c = RealMatrix::zeros(a.rows, b.cols);
    gemm_acc(a.rows, a.cols, b.cols, &a.data, &b.data, &mut c.data);
    Ok(c)
}

/// Writes the transpose of the `rows × cols` row-major `src` into `dst`.
pub fn transpose_into(rows: usize, cols: usize, src: &[f64], dst: &mut [f64]) {
    debug_assert_eq!(src.len(), rows * cols);
    debug_assert_eq!(dst.len(), rows * cols);
    const B: usize = 32;
    for i0 in (0..rows).step_by(B) {
        for j0 in (0..cols).step_by(B) {
            for i in i0..(i0 + B).min(rows) {
                for j in j0..(j0 + B).min(cols) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}

const MR: usize = 4;
const NR: usize = 16;
/// Rows per block on columns left over after the `NR`-wide blocks.
const TAIL_ROWS: usize = 8;
const KC: usize = 256;

/// `c += a · b` for row-major `a` (m×k), `b` (k×n), `c` (m×n).
///
/// Each `c[i][j]` receives `a[i][0]·b[0][j]`, then `a[i][1]·b[1][j]`, and so
/// on, each as a fused multiply-add.
pub fn gemm_acc(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert_eq!(a.len(), m * k, "gemm_acc: lhs size");
    gemm_blocked::<false>(m, k, n, a, b, c);
}

/// `c += aᵀ · b` for row-major `a` (k×m), `b` (k×n), `c` (m×n), with the same
/// summation order as [`gemm_acc`] on an explicit transpose.
pub fn gemm_tn_acc(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert_eq!(a.len(), m * k, "gemm_tn_acc: lhs size");
    gemm_blocked::<true>(m, k, n, a, b, c);
}

/// `acc[r][t] += a[r] · b[t]` as a fused multiply-add.
#[inline(always)]
fn fma_rows<const R: usize>(acc: &mut [[f64; NR]; R], a: &[f64; R], b: &[f64; NR]) {
    for (acc_row, &av) in acc.iter_mut().zip(a) {
        for t in 0..NR {
            acc_row[t] = av.mul_add(b[t], acc_row[t]);
        }
    }
}

/// Element `(i, p)` of the left operand.
#[inline(always)]
fn lhs<const T: bool>(a: &[f64], m: usize, k: usize, i: usize, p: usize) -> f64 {
    if T {
        a[p * m + i]
    } else {
        a[i * k + p]
    }
}

fn gemm_blocked<const T: bool>(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert_eq!(b.len(), k * n, "gemm_acc: rhs size");
    assert_eq!(c.len(), m * n, "gemm_acc: output size");
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    // Chunks of the reduction index run in ascending order, so blocking over
    // `k` keeps every output's summation order intact.
    let mut p0 = 0;
    while p0 < k {
        let kc = KC.min(k - p0);
        let panel = Panel { m, k, n, p0, kc };
        panel.run::<T>(a, b, c);
        p0 += kc;
    }
}

#[derive(Clone, Copy)]
struct Panel {
    m: usize,
    k: usize,
    n: usize,
    p0: usize,
    kc: usize,
}

impl Panel {
    fn run<const T: bool>(self, a: &[f64], b: &[f64], c: &mut [f64]) {
        let n_full = self.n - self.n % NR;
        let mut i = 0;
        while i + MR <= self.m {
            let mut j = 0;
            while j < n_full {
                self.block::<T, MR>(i, j, a, b, c);
                j += NR;
            }
            i += MR;
        }
        for r in i..self.m {
            let mut j = 0;
            while j < n_full {
                self.block::<T, 1>(r, j, a, b, c);
                j += NR;
            }
        }
        if n_full < self.n {
            self.tail::<T>(n_full, a, b, c);
        }
    }

    /// `R × NR` block of `c` at `(i, j)`.
    #[inline(always)]
    fn block<const T: bool, const R: usize>(self, i: usize, j: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
        let n = self.n;
        let mut acc = [[0.0_f64; NR]; R];
        for (r, acc_row) in acc.iter_mut().enumerate() {
            acc_row.copy_from_slice(&c[(i + r) * n + j..(i + r) * n + j + NR]);
        }
        if T {
            for p in self.p0..self.p0 + self.kc {
                let brow: &[f64; NR] = b[p * n + j..p * n + j + NR].try_into().unwrap();
                let acol: &[f64; R] = a[p * self.m + i..p * self.m + i + R].try_into().unwrap();
                fma_rows(&mut acc, acol, brow);
            }
        } else {
            let a_rows: [&[f64]; R] =
                std::array::from_fn(|r| &a[(i + r) * self.k + self.p0..(i + r) * self.k + self.p0 + self.kc]);
            for p in 0..self.kc {
                let p_abs = self.p0 + p;
                let brow: &[f64; NR] = b[p_abs * n + j..p_abs * n + j + NR].try_into().unwrap();
                let acol: [f64; R] = std::array::from_fn(|r| a_rows[r][p]);
                fma_rows(&mut acc, &acol, brow);
            }
        }
        for (r, acc_row) in acc.iter().enumerate() {
            c[(i + r) * n + j..(i + r) * n + j + NR].copy_from_slice(acc_row);
        }
    }

    /// Columns `j0..n`, one column at a time over blocks of rows.
    fn tail<const T: bool>(self, j0: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
        let n = self.n;
        for j in j0..n {
            let mut i = 0;
            while i < self.m {
                let rows = TAIL_ROWS.min(self.m - i);
                let mut acc = [0.0_f64; TAIL_ROWS];
                for r in 0..rows {
                    acc[r] = c[(i + r) * n + j];
                }
                for p in self.p0..self.p0 + self.kc {
                    let bv = b[p * n + j];
                    for (r, acc_r) in acc.iter_mut().enumerate().take(rows) {
                        *acc_r = lhs::<T>(a, self.m, self.k, i + r, p).mul_add(bv, *acc_r);
                    }
                }
                for r in 0..rows {
                    c[(i + r) * n + j] = acc[r];
                }
                i += rows;
            }
        }
    }
}

pub(crate) fn require_square(m: &RealMatrix, context: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Rejected(format!(
            "{context}: matrix is {}x{}, expected square",
            m.rows, m.cols
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn naive(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
        let mut c = RealMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for p in 0..a.cols() {
                    s = a[(i, p)].mul_add(b[(p, j)], s);
                }
                c[(i, j)] = s;
            }
        }
        c
    }

    fn random(rng: &mut RngStream, r: usize, c: usize) -> RealMatrix {
        let data = (0..r * c).map(|_| rng.normal(0.0, 1.0).unwrap()).collect();
        RealMatrix::from_vec(r, c, data).unwrap()
    }

    #[test]
    fn matvec_identity_and_hand_sum() {
        let id = RealMatrix::identity(2);
        assert_eq!(matvec(&id, &[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        let m = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(matvec(&m, &[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
    }

    #[test]
    fn matvec_matches_triple_loop_exactly() {
        let mut rng = RngStream::new(7);
        let m = random(&mut rng, 7, 5);
        let v: Vec<f64> = (0..5).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect();
        let mut expected = vec![0.0; 7];
        for i in 0..7 {
            for j in 0..5 {
                expected[i] += m[(i, j)] * v[j];
            }
        }
        assert_eq!(matvec(&m, &v).unwrap(), expected);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let m = RealMatrix::zeros(2, 3);
        assert!(matches!(matvec(&m, &[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn blocked_gemm_is_bitwise_naive() {
        let mut rng = RngStream::new(11);
        for &(m, k, n) in &[(1, 1, 1), (4, 3, 16), (9, 17, 35), (13, 64, 64), (5, 2, 1), (33, 7, 50), (6, 300, 20), (5, 513, 17)] {
            let a = random(&mut rng, m, k);
            let b = random(&mut rng, k, n);
            assert_eq!(matmul(&a, &b).unwrap(), naive(&a, &b), "{m}x{k}x{n}");
        }
    }

    #[test]
    fn transposed_lhs_matches_explicit_transpose() {
        let mut rng = RngStream::new(12);
        for &(m, k, n) in &[(1, 1, 1), (64, 1030, 1), (9, 17, 35), (13, 300, 64), (2, 5, 17)] {
            let at = random(&mut rng, k, m);
            let b = random(&mut rng, k, n);
            let mut c = vec![0.25; m * n];
            gemm_tn_acc(m, k, n, at.as_slice(), b.as_slice(), &mut c);
            let mut expect = vec![0.25; m * n];
            gemm_acc(m, k, n, at.transpose().as_slice(), b.as_slice(), &mut expect);
            assert_eq!(c, expect, "{m}x{k}x{n}");
        }
    }

    #[test]
    fn gemm_accumulates_into_existing_values() {
        let a = RealMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = RealMatrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let mut c = vec![0.5];
        gemm_acc(1, 2, 1, a.as_slice(), b.as_slice(), &mut c);
        assert_eq!(c, vec![11.5]);
    }

    #[test]
    fn transpose_round_trip() {
        let mut rng = RngStream::new(3);
        let a = random(&mut rng, 37, 41);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.transpose()[(5, 30)], a[(30, 5)]);
    }

    #[test]
    fn symmetrize_and_asymmetry() {
        let mut m = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 1.0]]).unwrap();
        assert!((m.asymmetry() - 0.5).abs() < 1e-15);
        m.symmetrize();
        assert_eq!(m[(0, 1)], 3.0);
        assert_eq!(m.asymmetry(), 0.0);
    }
}
