//! Small dense complex linear algebra.
//!
//! Everything here targets matrices of dimension at most a few dozen: the
//! generators, frames, channel and noise matrices of the simulator. Algorithms
//! are chosen for accuracy at those sizes (cyclic Jacobi for Hermitian
//! eigenproblems, Householder QR, partially pivoted LU), not for asymptotic
//! speed.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::tol::tolerances;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("entry count {len} does not match shape {rows}x{cols}")]
    BadLength { rows: usize, cols: usize, len: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("matrix is not skew-Hermitian (defect {defect:.3e})")]
    NotSkewHermitian { defect: f64 },
    #[error("matrix is rank deficient")]
    RankDeficient,
    #[error("matrix is numerically singular (condition estimate {cond:.3e})")]
    Singular { cond: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| if r == c { diag[r] } else { C64::new(0.0, 0.0) })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for
    /// literals in tests and catalogs.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius distance `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖A*A − I‖_F`: zero exactly when the columns are orthonormal.
    pub fn frame_defect(&self) -> f64 {
        let g = self.adjoint() * self;
        g.distance(&Self::identity(self.cols))
    }

    /// True when the matrix is square and `‖U*U − I‖_F ≤ tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && self.frame_defect() <= tol
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &Self) -> Result<Self> {
        if self.cols != below.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "vstack",
                left: self.shape(),
                right: below.shape(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(Self {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
        })
    }

    /// Rows `r0..r0+nr`, columns `c0..c0+nc`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        Self::from_fn(nr, nc, |r, c| self[(r0 + r, c0 + c)])
    }

    /// Writes `self · b` into `out` without allocating.
    pub fn mul_into(&self, b: &Self, out: &mut Self) {
        assert_eq!(self.cols, b.rows, "mul_into: inner dimensions");
        assert_eq!(out.shape(), (self.rows, b.cols), "mul_into: output shape");
        let n = b.cols;
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let dst = &mut out.data[r * n..(r + 1) * n];
            dst.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for (k, a) in row.iter().enumerate() {
                let brow = &b.data[k * n..(k + 1) * n];
                for (d, bv) in dst.iter_mut().zip(brow) {
                    *d += a * bv;
                }
            }
        }
    }

    /// Integer power of a square matrix by repeated squaring. Negative
    /// exponents use the adjoint and therefore assume unitarity.
    pub fn unitary_pow(&self, k: i64) -> Self {
        assert!(self.is_square());
        let mut base = if k < 0 { self.adjoint() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:>10.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Matrix product. Panics on mismatched shapes; use [`mat_mul`] for a
/// checked variant.
impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        self.mul_into(rhs, &mut out);
        out
    }
}

impl Mul<&ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        &self * rhs
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add: shapes");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub: shapes");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_re(-1.0)
    }
}

/// Checked matrix product.
pub fn mat_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "mat_mul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(a * b)
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.frobenius_norm()
}

fn require_square(a: &ComplexMatrix) -> Result<usize> {
    if a.is_square() {
        Ok(a.rows)
    } else {
        Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        })
    }
}

/// In-place LU factorization with partial pivoting.
struct Lu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
    sign: f64,
    /// Smallest pivot modulus seen; zero when exactly singular.
    min_pivot: f64,
}

fn lu_factor(a: &ComplexMatrix) -> Lu {
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|r| (r, lu[(r, k)].norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        min_pivot = min_pivot.min(pmax);
        if pmax == 0.0 {
            continue;
        }
        if p != k {
            for c in 0..n {
                lu.data.swap(k * n + c, p * n + c);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        for r in k + 1..n {
            let f = lu[(r, k)] / pivot;
            lu[(r, k)] = f;
            for c in k + 1..n {
                let t = lu[(k, c)];
                lu[(r, c)] -= f * t;
            }
        }
    }
    if n == 0 {
        min_pivot = 1.0;
    }
    Lu {
        lu,
        perm,
        sign,
        min_pivot,
    }
}

/// Determinant; closed form for 1×1 and 2×2, partially pivoted LU otherwise.
pub fn determinant(a: &ComplexMatrix) -> Result<C64> {
    let n = require_square(a)?;
    Ok(match n {
        0 => C64::new(1.0, 0.0),
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        _ => {
            let f = lu_factor(a);
            if f.min_pivot == 0.0 {
                return Ok(C64::new(0.0, 0.0));
            }
            f.lu.diagonal().into_iter().product::<C64>() * f.sign
        }
    })
}

fn norm1(a: &ComplexMatrix) -> f64 {
    (0..a.cols)
        .map(|c| (0..a.rows).map(|r| a[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse via LU. Rejects matrices whose 1-norm condition number exceeds
/// `max_cond` or whose pivots vanish.
#[allow(clippy::needless_range_loop)] // triangular solves
pub fn inverse_checked(a: &ComplexMatrix, max_cond: f64) -> Result<ComplexMatrix> {
    let n = require_square(a)?;
    let f = lu_factor(a);
    let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if f.min_pivot <= tolerances().singular_pivot * scale || scale == 0.0 {
        return Err(LinalgError::Singular {
            cond: f64::INFINITY,
        });
    }
    let mut inv = ComplexMatrix::zeros(n, n);
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        // Solve L U x = P e_j.
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = if f.perm[i] == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
        }
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= f.lu[(i, k)] * col[k];
            }
            col[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= f.lu[(i, k)] * col[k];
            }
            col[i] = s / f.lu[(i, i)];
        }
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    let cond = norm1(a) * norm1(&inv);
    if !cond.is_finite() || cond > max_cond {
        return Err(LinalgError::Singular { cond });
    }
    Ok(inv)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    inverse_checked(a, 1.0 / f64::EPSILON)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows;
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += m[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic two-sided Jacobi for Hermitian input. Only the Hermitian part
/// `(A + A*)/2` is used.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    let n = require_square(a)?;
    let tol = tolerances();
    let mut m = ComplexMatrix::from_fn(n, n, |r, c| (a[(r, c)] + a[(c, r)].conj()) * 0.5);
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();
    let threshold = tol.jacobi_off * scale.max(f64::MIN_POSITIVE);

    let mut converged = off_diagonal_norm(&m) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < tol.jacobi_max_sweeps {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta.is_infinite() {
                    1.0 / (2.0 * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;
                for k in 0..n {
                    let x = m[(k, p)];
                    let y = m[(k, q)];
                    m[(k, p)] = x * gpp + y * gqp;
                    m[(k, q)] = x * gpq + y * gqq;
                }
                for k in 0..n {
                    let x = m[(p, k)];
                    let y = m[(q, k)];
                    m[(p, k)] = gpp.conj() * x + gqp.conj() * y;
                    m[(q, k)] = gpq.conj() * x + gqq.conj() * y;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
                for k in 0..n {
                    let x = v[(k, p)];
                    let y = v[(k, q)];
                    v[(k, p)] = x * gpp + y * gqp;
                    v[(k, q)] = x * gpq + y * gqq;
                }
            }
        }
        converged = off_diagonal_norm(&m) <= threshold;
    }
    if !converged {
        return Err(LinalgError::NoConvergence { sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEig { values, vectors })
}

/// Singular values in descending order, computed from the smaller Gram
/// matrix and clamped to be non-negative.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let gram = if a.rows >= a.cols {
        a.adjoint() * a
    } else {
        a * &a.adjoint()
    };
    gram_singular_values(&gram)
}

fn gram_singular_values(gram: &ComplexMatrix) -> Vec<f64> {
    let eig = hermitian_eig(gram).unwrap_or_else(|_| {
        // Jacobi on a well-scaled PSD matrix of this size always converges
        // well before the sweep cap; fall back to the diagonal if a caller
        // shrank the cap to nothing.
        HermitianEig {
            values: gram.diagonal().iter().map(|z| z.re).collect(),
            vectors: ComplexMatrix::identity(gram.rows),
        }
    });
    eig.values.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Singular values of a cross product `Φ_a* Φ_b` of two frames, clamped
/// into `[0, 1]`.
pub fn frame_cross_singular_values(cross: &ComplexMatrix) -> Vec<f64> {
    singular_values(cross)
        .into_iter()
        .map(|s| s.min(1.0))
        .collect()
}

/// Eigen-decomposition `U = basis · diag(e^{iθ}) · basis*` of a unitary matrix.
#[derive(Debug, Clone)]
pub struct UnitaryEig {
    pub basis: ComplexMatrix,
    /// Eigenphases in `[0, 2π)`.
    pub angles: Vec<f64>,
}

impl UnitaryEig {
    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    /// `U^k` rebuilt from the decomposition.
    pub fn power(&self, k: i64) -> ComplexMatrix {
        let phases: Vec<C64> = self
            .angles
            .iter()
            .map(|&t| C64::from_polar(1.0, k as f64 * t))
            .collect();
        let n = self.dim();
        let b = &self.basis;
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n).map(|m| b[(r, m)] * phases[m] * b[(c, m)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.power(1)
    }
}

fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(std::f64::consts::TAU);
    if w >= std::f64::consts::TAU {
        0.0
    } else {
        w
    }
}

/// Eigen-decomposition of a unitary matrix.
///
/// A unitary `U` splits as `H₁ + iH₂` with commuting Hermitian parts, so
/// every rotated combination `cos φ·H₁ + sin φ·H₂` shares its eigenvectors.
/// Distinct eigenphases only collide for that combination when they are
/// mirror images about `φ`; a few incommensurate `φ` are tried and the basis
/// that best diagonalizes `U` is kept.
pub fn unitary_eig(u: &ComplexMatrix) -> Result<UnitaryEig> {
    let n = require_square(u)?;
    let defect = u.frame_defect();
    if defect > tolerances().unitarity {
        return Err(LinalgError::NotUnitary { defect });
    }
    let ua = u.adjoint();
    let h1 = (u + &ua).scale_re(0.5);
    let h2 = (u - &ua).scale(C64::new(0.0, -0.5));

    const MIRROR_AXES: [f64; 5] = [0.387_123, 1.129_871, 2.041_733, 2.653_917, 0.911_307];
    let mut best: Option<(f64, ComplexMatrix, ComplexMatrix)> = None;
    for &phi in &MIRROR_AXES {
        let h = &h1.scale_re(phi.cos()) + &h2.scale_re(phi.sin());
        let eig = hermitian_eig(&h)?;
        let d = &(&eig.vectors.adjoint() * u) * &eig.vectors;
        let off = off_diagonal_norm(&d);
        let better = best.as_ref().is_none_or(|b| off < b.0);
        if better {
            best = Some((off, eig.vectors, d));
        }
        if off <= 1e-13 * (n as f64).sqrt() {
            break;
        }
    }
    let (_, basis, d) = best.expect("at least one axis tried");
    let angles = d.diagonal().iter().map(|z| wrap_angle(z.arg())).collect();
    Ok(UnitaryEig { basis, angles })
}

/// Full QR factorization of a square matrix via Householder reflections,
/// normalized so that `R` has a real positive diagonal.
///
/// The normalization makes the factorization unique; without it `Q` drawn
/// from a Gaussian matrix is not Haar distributed.
pub fn qr(g: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = require_square(g)?;
    let mut r = g.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut v = vec![C64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        let xnorm = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let ph = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -ph * xnorm;
        for i in k..n {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let vnorm = (k..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for vi in v.iter_mut().skip(k) {
            *vi /= vnorm;
        }
        // R ← (I − 2vv*) R on rows k..n
        for c in k..n {
            let s: C64 = (k..n).map(|i| v[i].conj() * r[(i, c)]).sum();
            for i in k..n {
                let t = v[i] * s * 2.0;
                r[(i, c)] -= t;
            }
        }
        // Q ← Q (I − 2vv*)
        for row in 0..n {
            let s: C64 = (k..n).map(|i| q[(row, i)] * v[i]).sum();
            for i in k..n {
                let t = s * v[i].conj() * 2.0;
                q[(row, i)] -= t;
            }
        }
    }

    let scale = g.frobenius_norm();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() <= 1e-12 * scale || scale == 0.0 {
            return Err(LinalgError::RankDeficient);
        }
        let ph = d / d.norm();
        for row in 0..n {
            q[(row, j)] *= ph;
        }
        for c in 0..n {
            r[(j, c)] *= ph.conj();
        }
        r[(j, j)] = C64::new(d.norm(), 0.0);
        for row in j + 1..n {
            r[(row, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((q, r))
}

/// Volume `sqrt(det(Z*Z))` spanned by the columns of `z`, as the product of
/// the `|R_jj|` of a Householder QR. Small singular values keep absolute
/// accuracy, unlike a determinant of the Gram matrix.
pub fn column_volume(z: &ComplexMatrix) -> f64 {
    let (rows, cols) = z.shape();
    if rows < cols {
        return 0.0;
    }
    let mut a = z.clone();
    let mut vol = 1.0;
    for j in 0..cols {
        let norm: f64 = (j..rows).map(|r| a[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        vol *= norm;
        if norm == 0.0 {
            return 0.0;
        }
        let x0 = a[(j, j)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        // v = x + phase·‖x‖·e_1, reflector I − 2vv*/‖v‖²
        let mut v: Vec<C64> = (j..rows).map(|r| a[(r, j)]).collect();
        v[0] += phase * norm;
        let vnorm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        for c in j + 1..cols {
            let dot: C64 = v.iter().enumerate().map(|(k, vk)| vk.conj() * a[(j + k, c)]).sum();
            let f = dot * (2.0 / vnorm2);
            for (k, vk) in v.iter().enumerate() {
                let cur = a[(j + k, c)];
                a.as_mut_slice()[(j + k) * cols + c] = cur - vk * f;
            }
        }
    }
    vol
}

/// Coordinates of the columns of `b` in an orthonormal basis of the
/// orthogonal complement of the column space of `a` (which must have full
/// column rank): a `(rows − a.cols()) × b.cols()` matrix. The basis comes
/// from the Householder reflectors that triangularize `a`, so the result is
/// fixed up to a left unitary factor.
pub fn orthogonal_component(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rows, k) = a.shape();
    let cols = b.cols();
    assert_eq!(rows, b.rows(), "orthogonal_component needs equal row counts");
    let mut a = a.clone();
    let mut b = b.clone();
    let reflect = |m: &mut ComplexMatrix, v: &[C64], vnorm2: f64, j: usize, c: usize| {
        let w = m.cols();
        let dot: C64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * m[(j + i, c)]).sum();
        let f = dot * (2.0 / vnorm2);
        for (i, vi) in v.iter().enumerate() {
            let cur = m[(j + i, c)];
            m.as_mut_slice()[(j + i) * w + c] = cur - vi * f;
        }
    };
    for j in 0..k.min(rows) {
        let norm: f64 = (j..rows).map(|r| a[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(j, j)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let mut v: Vec<C64> = (j..rows).map(|r| a[(r, j)]).collect();
        v[0] += phase * norm;
        let vnorm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        for c in j + 1..k {
            reflect(&mut a, &v, vnorm2, j, c);
        }
        for c in 0..cols {
            reflect(&mut b, &v, vnorm2, j, c);
        }
    }
    b.block(k.min(rows), 0, rows.saturating_sub(k), cols)
}

/// Unitary factor of [`qr`].
pub fn qr_unitary(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    qr(g).map(|(q, _)| q)
}

/// Nearest unitary matrix in Frobenius norm (the polar factor
/// `A (A*A)^{-1/2}`).
pub fn nearest_unitary(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = require_square(a)?;
    let eig = hermitian_eig(&(a.adjoint() * a))?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    if eig.values.iter().any(|&l| l <= 1e-24 * top.max(f64::MIN_POSITIVE)) || top <= 0.0 {
        return Err(LinalgError::RankDeficient);
    }
    let w = &eig.vectors;
    let inv_sqrt = ComplexMatrix::from_fn(n, n, |r, c| {
        (0..n)
            .map(|m| w[(r, m)] * (1.0 / eig.values[m].sqrt()) * w[(c, m)].conj())
            .sum()
    });
    Ok(a * &inv_sqrt)
}
