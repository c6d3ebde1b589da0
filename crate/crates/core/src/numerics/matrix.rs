use crate::{Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Matrix::identity(n);
        m.data.iter_mut().for_each(|x| *x *= s);
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Wraps a row-major buffer. Fails when the length does not match or a value is not finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "buffer of length {} cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {}) = {}",
                pos / cols.max(1),
                pos % cols.max(1),
                data[pos]
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Wraps a buffer without the finiteness check; only for raw data that is validated
    /// before any arithmetic touches it.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    pub(crate) fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies the listed rows into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `y = self · x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `y = selfᵀ · x`
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut y);
        }
        y
    }

    /// `self · other`
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        gemm(1.0, self, Trans::No, other, Trans::No)
    }

    /// `self · otherᵀ`
    pub fn matmul_t(&self, other: &Matrix) -> Matrix {
        gemm(1.0, self, Trans::No, other, Trans::Yes)
    }

    /// `selfᵀ · other`
    pub fn t_matmul(&self, other: &Matrix) -> Matrix {
        gemm(1.0, self, Trans::Yes, other, Trans::No)
    }

    /// Adds `bias` to every row.
    pub fn add_row_vector(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.cols);
        for i in 0..self.rows {
            axpy(1.0, bias, self.row_mut(i));
        }
    }

    /// Column sums, accumulated in row order.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for i in 0..self.rows {
            axpy(1.0, self.row(i), &mut s);
        }
        s
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Lower Cholesky factor `L` with `self = L·Lᵀ`.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.rows;
        if n != self.cols {
            return Err(Error::Dimension(format!(
                "cholesky needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let lj = &l.data[j * n..j * n + j];
            let d = self.get(j, j) - dot(lj, lj);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Numerical(format!(
                    "matrix is not positive definite: pivot {j} = {d:e}"
                )));
            }
            let d = d.sqrt();
            l.data[j * n + j] = d;
            for i in j + 1..n {
                let s = self.get(i, j) - dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                l.data[i * n + j] = s / d;
            }
        }
        Ok(l)
    }

    /// Inverse of a symmetric positive definite matrix via its Cholesky factor.
    ///
    /// The result is symmetrized. Fails with a condition estimate when the matrix is not SPD
    /// or is too ill-conditioned for `f64`.
    pub fn spd_inverse(&self) -> Result<Matrix> {
        let n = self.rows;
        let l = self.cholesky()?;
        let diag: Vec<f64> = (0..n).map(|i| l.get(i, i)).collect();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        let cond = (hi / lo).powi(2);
        if !(cond < 1e14) {
            return Err(Error::Numerical(format!(
                "precision matrix is ill-conditioned (Cholesky diagonal condition estimate {cond:e})"
            )));
        }
        // L⁻¹ by forward substitution, one row at a time: row i = (e_i − Σ_k L[i][k]·row k) / L[i][i].
        let mut linv = Matrix::zeros(n, n);
        let mut acc = vec![0.0; n];
        for i in 0..n {
            acc.iter_mut().for_each(|x| *x = 0.0);
            for k in 0..i {
                let lik = l.data[i * n + k];
                axpy(-lik, &linv.data[k * n..k * n + k + 1], &mut acc[..k + 1]);
            }
            acc[i] += 1.0;
            for j in 0..=i {
                linv.data[i * n + j] = acc[j] / diag[i];
            }
        }
        // P⁻¹ = L⁻ᵀ L⁻¹
        let mut inv = linv.t_matmul(&linv);
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
                inv.set(i, j, v);
                inv.set(j, i, v);
            }
        }
        if !inv.is_finite() {
            return Err(Error::Numerical("inverse contains non-finite values".into()));
        }
        Ok(inv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Trans {
    No,
    Yes,
}

/// `alpha · op(a) · op(b)` through the blocked kernel of `matrixmultiply`.
pub(crate) fn gemm(alpha: f64, a: &Matrix, ta: Trans, b: &Matrix, tb: Trans) -> Matrix {
    let (m, k, rsa, csa) = match ta {
        Trans::No => (a.rows, a.cols, a.cols as isize, 1),
        Trans::Yes => (a.cols, a.rows, 1, a.cols as isize),
    };
    let (kb, n, rsb, csb) = match tb {
        Trans::No => (b.rows, b.cols, b.cols as isize, 1),
        Trans::Yes => (b.cols, b.rows, 1, b.cols as isize),
    };
    assert_eq!(k, kb, "inner dimensions differ");
    let mut c = Matrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: the strides describe the exact row-major buffers of `a`, `b` and `c`, whose
    // lengths were checked against (m, k), (k, n) and (m, n) above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            0.0,
            c.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_mul(a: &Matrix, b: &Matrix) -> Matrix {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
        })
    }

    #[test]
    fn gemm_variants_match_naive_product() {
        let a = Matrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.5 - 2.0);
        let b = Matrix::from_fn(4, 2, |i, j| (i as f64 - j as f64) * 0.25);
        let expect = naive_mul(&a, &b);
        assert!(a.matmul(&b).max_abs_diff(&expect) < 1e-12);
        assert!(a.matmul_t(&b.transpose()).max_abs_diff(&expect) < 1e-12);
        assert!(a.transpose().t_matmul(&b).max_abs_diff(&expect) < 1e-12);
        let x = [1.0, -1.0, 2.0, 0.5];
        let y = a.matvec(&x);
        let yt = a.transpose().matvec_t(&x);
        for (p, q) in y.iter().zip(&yt) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(matches!(Matrix::from_vec(2, 2, vec![0.0; 3]), Err(Error::Dimension(_))));
        assert!(matches!(
            Matrix::from_vec(1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn spd_inverse_of_known_matrix() {
        let p = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let c = p.spd_inverse().unwrap();
        // det = 8
        let expect = Matrix::from_rows(&[vec![3.0 / 8.0, -2.0 / 8.0], vec![-2.0 / 8.0, 0.5]]).unwrap();
        assert!(c.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let p = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(p.spd_inverse(), Err(Error::Numerical(_))));
        let singular = Matrix::zeros(3, 3);
        assert!(matches!(singular.spd_inverse(), Err(Error::Numerical(_))));
    }
}
