//! Dense complex matrices and the handful of factorizations the detector needs.
//!
//! Everything here is sized for small systems (a few tens of users at most),
//! so storage is a flat row-major `Vec` and the kernels are plain loops.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![ONE; n])
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let diag: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&diag)
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    /// Squared Frobenius norm, i.e. `tr(M^H M)`.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Right-multiplies by `diag(d)`, scaling column `j` by `d[j]`.
    pub fn mul_diag_right(&self, d: &[Complex64]) -> Self {
        assert_eq!(
            d.len(),
            self.cols,
            "diagonal length must match column count"
        );
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, &dj) in d.iter().enumerate() {
                out[(i, j)] *= dj;
            }
        }
        out
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.conj_transpose()) <= tol
    }

    /// Inverse by Gaussian elimination with partial pivoting. Works for any
    /// nonsingular square matrix; returns `None` when a pivot vanishes.
    pub fn inverse_general(&self) -> Option<Self> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return None;
        }
        for col in 0..n {
            let (pivot_row, pivot_mag) =
                (col..n)
                    .map(|r| (r, a[(r, col)].norm()))
                    .fold(
                        (col, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_mag <= f64::EPSILON * scale * n as f64 {
                return None;
            }
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let p = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= p;
                inv[(col, j)] *= p;
            }
            for r in (0..n).filter(|&r| r != col) {
                let f = a[(r, col)];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (acol, icol) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= f * acol;
                    inv[(r, j)] -= f * icol;
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{}", self[(i, j)]))
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// `H^H H`, exactly Hermitian (the lower triangle mirrors the upper one).
pub fn gram(h: &ComplexMatrix) -> ComplexMatrix {
    let k = h.cols();
    let mut g = ComplexMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let mut acc = ZERO;
            for r in 0..h.rows() {
                acc += h[(r, i)].conj() * h[(r, j)];
            }
            if i == j {
                g[(i, i)] = Complex64::new(acc.re, 0.0);
            } else {
                g[(i, j)] = acc;
                g[(j, i)] = acc.conj();
            }
        }
    }
    g
}

/// Lower-triangular Cholesky factor `L` with `M = L L^H`.
///
/// Only the lower triangle of `M` is read. Diagonal pivots are real; a pivot
/// at or below `n·ε·max_i M_ii` is reported as `NotPositiveDefinite`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: ComplexMatrix,
}

impl Cholesky {
    pub fn factor(m: &ComplexMatrix) -> Result<Self> {
        assert!(m.is_square(), "Cholesky of a non-square matrix");
        let n = m.rows();
        // pivots at rounding level relative to the largest diagonal count as zero
        let floor =
            n as f64 * f64::EPSILON * (0..n).map(|i| m[(i, i)].re.abs()).fold(0.0, f64::max);
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor_matrix(&self) -> &ComplexMatrix {
        &self.l
    }

    /// `ln det M = 2 Σ ln L_jj`.
    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.l.rows())
            .map(|j| self.l[(j, j)].re.ln())
            .sum::<f64>()
    }

    /// `L^{-1}`, lower triangular.
    fn lower_inverse(&self) -> ComplexMatrix {
        let n = self.l.rows();
        let mut x = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            x[(j, j)] = Complex64::new(1.0 / self.l[(j, j)].re, 0.0);
            for i in (j + 1)..n {
                let mut s = ZERO;
                for k in j..i {
                    s += self.l[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = -s / self.l[(i, i)].re;
            }
        }
        x
    }

    /// Diagonal of `M^{-1}`: `[M^{-1}]_kk = Σ_j |(L^{-1})_{jk}|²`.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let x = self.lower_inverse();
        let n = x.rows();
        (0..n)
            .map(|k| (k..n).map(|j| x[(j, k)].norm_sqr()).sum())
            .collect()
    }

    /// `M^{-1} = L^{-H} L^{-1}`, returned exactly Hermitian.
    pub fn inverse(&self) -> ComplexMatrix {
        let x = self.lower_inverse();
        let n = x.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for k in j..n {
                    acc += x[(k, i)].conj() * x[(k, j)];
                }
                if i == j {
                    out[(i, i)] = Complex64::new(acc.re, 0.0);
                } else {
                    out[(i, j)] = acc;
                    out[(j, i)] = acc.conj();
                }
            }
        }
        out
    }
}

/// `ln det M` for Hermitian positive definite `M`, as a sum of log pivots.
pub fn logdet_hpd(m: &ComplexMatrix) -> Result<f64> {
    Ok(Cholesky::factor(m)?.logdet())
}

/// `I + γ M` for square `M`.
pub fn regularize(m: &ComplexMatrix, gamma: f64) -> ComplexMatrix {
    assert!(m.is_square(), "regularize needs a square matrix");
    let mut a = m.scale(gamma);
    for i in 0..a.rows() {
        a[(i, i)] += ONE;
    }
    a
}

/// `(I + γ M)^{-1}` for Hermitian PSD `M` and `γ ≥ 0`.
pub fn invert_regularized(m: &ComplexMatrix, gamma: f64) -> ComplexMatrix {
    assert!(gamma >= 0.0, "regularization weight must be non-negative");
    if gamma == 0.0 {
        return ComplexMatrix::identity(m.rows());
    }
    Cholesky::factor(&regularize(m, gamma))
        .expect("I + γM is positive definite for PSD M and γ ≥ 0")
        .inverse()
}

/// Smallest singular value of a square matrix, `1 / ‖M^{-1}‖₂`.
///
/// `‖M^{-1}‖₂²` is the top eigenvalue of `M^{-H} M^{-1}`, found by power
/// iteration. Returns 0 for a numerically singular matrix.
pub fn smallest_singular_value(m: &ComplexMatrix) -> f64 {
    let Some(inv) = m.inverse_general() else {
        return 0.0;
    };
    let w = gram(&inv.conj_transpose());
    // power iteration on the Hermitian PSD matrix inv · inv^H (same spectrum)
    let n = w.rows();
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.1 * i as f64, 0.0))
        .collect();
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let mut next = vec![ZERO; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += w[(i, j)] * v[j];
            }
        }
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return f64::INFINITY;
        }
        next.iter_mut().for_each(|z| *z /= norm);
        let prev = lambda;
        lambda = norm;
        v = next;
        if (lambda - prev).abs() <= 1e-14 * lambda {
            break;
        }
    }
    1.0 / lambda.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn construction_rejects_bad_shapes_and_non_finite() {
        assert!(ComplexMatrix::new(0, 2, vec![]).is_err());
        assert!(ComplexMatrix::new(2, 2, vec![ONE; 3]).is_err());
        assert!(ComplexMatrix::new(1, 2, vec![ONE, c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn gram_of_identity_and_diagonal() {
        assert_eq!(
            gram(&ComplexMatrix::identity(2)),
            ComplexMatrix::identity(2)
        );
        let h = ComplexMatrix::from_real_diag(&[2.0, 3.0]);
        assert_eq!(gram(&h), ComplexMatrix::from_real_diag(&[4.0, 9.0]));
    }

    #[test]
    fn gram_handles_rectangular_input() {
        let h = ComplexMatrix::new(
            3,
            2,
            vec![c(1.0, 1.0), c(0.0, 2.0), ONE, ZERO, ZERO, c(0.0, -1.0)],
        )
        .unwrap();
        let g = gram(&h);
        assert_eq!((g.rows(), g.cols()), (2, 2));
        // column 0 = (1+i, 1, 0), column 1 = (2i, 0, -i)
        assert!((g[(0, 0)] - c(3.0, 0.0)).norm() < 1e-15);
        assert!((g[(1, 1)] - c(5.0, 0.0)).norm() < 1e-15);
        assert!((g[(0, 1)] - c(1.0, -1.0) * c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn logdet_trivial_cases() {
        assert_eq!(logdet_hpd(&ComplexMatrix::identity(3)).unwrap(), 0.0);
        let e = std::f64::consts::E;
        let v = logdet_hpd(&ComplexMatrix::from_real_diag(&[e, e * e])).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
    }

    #[test]
    fn logdet_rejects_singular_and_indefinite() {
        let singular = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            logdet_hpd(&singular),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        let indefinite = ComplexMatrix::from_real_diag(&[1.0, -2.0]);
        assert!(matches!(
            logdet_hpd(&indefinite),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn logdet_is_additive_over_diagonal_products() {
        let a = ComplexMatrix::from_real_diag(&[0.5, 3.0, 11.0]);
        let b = ComplexMatrix::from_real_diag(&[2.5, 1e-3, 7.0]);
        let lhs = logdet_hpd(&a).unwrap() + logdet_hpd(&b).unwrap();
        let rhs = logdet_hpd(&(&a * &b)).unwrap();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn logdet_survives_where_det_would_overflow() {
        let m = ComplexMatrix::from_real_diag(&vec![1e10; 64]);
        let v = logdet_hpd(&m).unwrap();
        assert!((v - 64.0 * 1e10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn regularized_inverse_examples() {
        let r = invert_regularized(&ComplexMatrix::identity(4), 1.0);
        assert!(r.max_abs_diff(&ComplexMatrix::identity(4).scale(0.5)) < 1e-15);

        let m = ComplexMatrix::from_real(2, 2, &[3.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(invert_regularized(&m, 0.0), ComplexMatrix::identity(2));

        let r = invert_regularized(&ComplexMatrix::from_real_diag(&[1.0, 4.0]), 2.0);
        assert!(r.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0 / 3.0, 1.0 / 9.0])) < 1e-15);
    }

    #[test]
    fn inverse_diagonal_matches_full_inverse() {
        let m = ComplexMatrix::new(
            3,
            3,
            vec![
                c(4.0, 0.0),
                c(1.0, 0.5),
                c(0.0, -1.0),
                c(1.0, -0.5),
                c(3.0, 0.0),
                c(0.2, 0.0),
                c(0.0, 1.0),
                c(0.2, 0.0),
                c(2.0, 0.0),
            ],
        )
        .unwrap();
        let ch = Cholesky::factor(&m).unwrap();
        let full = ch.inverse();
        for (k, d) in ch.inverse_diagonal().into_iter().enumerate() {
            assert!((full[(k, k)].re - d).abs() < 1e-14);
        }
        let eye = &m * &full;
        assert!(eye.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-13);
    }

    #[test]
    fn general_inverse_and_singular_detection() {
        let m =
            ComplexMatrix::new(2, 2, vec![ZERO, c(2.0, 1.0), c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        let inv = m.inverse_general().unwrap();
        assert!((&m * &inv).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
        let singular = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(singular.inverse_general().is_none());
        assert_eq!(smallest_singular_value(&singular), 0.0);
    }

    #[test]
    fn smallest_singular_value_of_diagonal() {
        let m = ComplexMatrix::from_diag(&[c(3.0, 0.0), c(0.0, -0.25), c(1.0, 1.0)]);
        assert!((smallest_singular_value(&m) - 0.25).abs() < 1e-12);
    }
}
