//! Parameterizations of the unitary group: Cayley transform, Haar sampling
//! and small random moves used by the searches.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{inverse_checked, qr_unitary, ComplexMatrix, LinalgError, C64};
use crate::metrics::SquareConstellation;
use crate::tol::tolerances;

/// A matrix with `S* = −S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewHermitian(ComplexMatrix);

impl SkewHermitian {
    /// Accepts `s` if it is square and skew-Hermitian to 1e-12.
    pub fn new(s: ComplexMatrix) -> Result<Self, LinalgError> {
        if !s.is_square() {
            return Err(LinalgError::NotSquare {
                rows: s.rows(),
                cols: s.cols(),
            });
        }
        let defect = (&s + &s.adjoint()).frobenius_norm();
        if defect > 1e-12 * s.frobenius_norm().max(1.0) {
            return Err(LinalgError::NotSkewHermitian { defect });
        }
        Ok(Self(s))
    }

    /// Strictly upper entries CN(0, σ²), diagonal `i·N(0, σ²)`.
    pub fn random<R: Rng + ?Sized>(m: usize, sigma: f64, rng: &mut R) -> Self {
        let mut s = ComplexMatrix::zeros(m, m);
        for r in 0..m {
            let d: f64 = rng.sample(StandardNormal);
            s.as_mut_slice()[r * m + r] = C64::new(0.0, sigma * d);
            for c in r + 1..m {
                let z = complex_normal(rng) * sigma;
                s.as_mut_slice()[r * m + c] = z;
                s.as_mut_slice()[c * m + r] = -z.conj();
            }
        }
        Self(s)
    }

    pub fn size(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}

/// CN(0, 1): independent real and imaginary parts with variance ½ each.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of independent CN(0, 1) entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// `(I + Y)^{-1}(I − Y)`. Maps skew-Hermitian matrices to unitaries without
/// eigenvalue −1 and is its own inverse.
pub fn cayley(y: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !y.is_square() {
        return Err(LinalgError::NotSquare {
            rows: y.rows(),
            cols: y.cols(),
        });
    }
    let id = ComplexMatrix::identity(y.rows());
    let inv = inverse_checked(&(&id + y), tolerances().cayley_max_cond)?;
    Ok(&inv * &(&id - y))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// diagonal of R made positive.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ComplexMatrix {
    assert!(m >= 1, "haar_unitary needs m >= 1");
    loop {
        // a rank-deficient Gaussian draw has probability zero; redraw if seen
        if let Ok(q) = qr_unitary(&complex_gaussian(m, m, rng)) {
            return q;
        }
    }
}

/// `l` independent Haar unitaries of size `m`.
pub fn random_constellation<R: Rng + ?Sized>(m: usize, l: usize, rng: &mut R) -> SquareConstellation {
    assert!(l >= 2, "a constellation needs at least two elements");
    loop {
        let elements = (0..l).map(|_| haar_unitary(m, rng)).collect();
        let sq = SquareConstellation::new(elements).expect("Haar draws are unitary");
        if sq.duplicate_pair().is_none() {
            return sq;
        }
    }
}

/// Random move `u · cayley(S)` with `S` drawn by [`SkewHermitian::random`].
/// `sigma = 0` returns `u` unchanged.
pub fn perturb<R: Rng + ?Sized>(u: &ComplexMatrix, sigma: f64, rng: &mut R) -> ComplexMatrix {
    if sigma == 0.0 {
        return u.clone();
    }
    loop {
        let s = SkewHermitian::random(u.rows(), sigma, rng);
        // I + S has eigenvalues 1 + iλ, so this only fails for absurd σ
        if let Ok(c) = cayley(s.as_matrix()) {
            return u * &c;
        }
    }
}
