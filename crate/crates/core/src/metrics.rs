//! Diversity measures of unitary constellations.
//!
//! For two frames `Φ_a`, `Φ_b` (T×M, orthonormal columns) let `δ_m` be the
//! singular values of `Φ_a*Φ_b`. Everything in this module is a function of
//! the per-pair gaps `1 − δ_m²`:
//!
//! * pair DP distance `(Π_m (1 − δ_m²))^{1/2M}`,
//! * pair DS distance `sqrt(1 − ‖Φ_a*Φ_b‖_F²/M)`,
//! * the Chernoff term `½ Π_m [1 + ρ̃(1 − δ_m²)]^{−N}`,
//! * the exact pairwise error probability, an integral over the same gaps.
//!
//! The constellation-level quantities are extrema of these over all pairs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{column_volume, determinant, orthogonal_component, hermitian_eig, ComplexMatrix, LinalgError};
use crate::quad;
use crate::tol::tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("frame shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("constellation needs at least 2 elements, got {0}")]
    TooFew(usize),
    #[error("block length T={t} is smaller than the antenna count M={m}")]
    NotTall { t: usize, m: usize },
    #[error("unitarity violated: element {index} has frame defect {defect:.3e}")]
    NotFrame { index: usize, defect: f64 },
    #[error("distinctness violated: elements {0} and {1} coincide")]
    Duplicate(usize, usize),
    #[error("receive antenna count must be at least 1")]
    NoReceiveAntennas,
    #[error("SNR must be positive and finite, got {0}")]
    BadSnr(f64),
    #[error("quadrature did not converge (partial estimate {partial:.6e})")]
    QuadratureFailed { partial: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Ordered list of T×M unitary frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    t: usize,
    m: usize,
    elements: Vec<ComplexMatrix>,
}

impl Constellation {
    /// Checks shapes, `T ≥ M`, `L ≥ 2` and the frame property of every element.
    ///
    /// Distinctness is not enforced here so that degenerate constellations
    /// (a search iterate, a resonant angle choice) can still be evaluated;
    /// see [`Constellation::validate`].
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let first = elements.first().ok_or(MetricsError::TooFew(0))?;
        let (t, m) = first.shape();
        if elements.len() < 2 {
            return Err(MetricsError::TooFew(elements.len()));
        }
        if t < m {
            return Err(MetricsError::NotTall { t, m });
        }
        let tol = tolerances().unitarity;
        for (index, e) in elements.iter().enumerate() {
            if e.shape() != (t, m) {
                return Err(MetricsError::ShapeMismatch((t, m), e.shape()));
            }
            let defect = e.frame_defect();
            if defect.is_nan() || defect > tol {
                return Err(MetricsError::NotFrame { index, defect });
            }
        }
        Ok(Self { t, m, elements })
    }

    /// Full invariant check, including pairwise distinctness.
    pub fn validate(&self) -> Result<()> {
        match self.duplicate_pair() {
            Some((i, j)) => Err(MetricsError::Duplicate(i, j)),
            None => Ok(()),
        }
    }

    /// First pair of elements closer than the duplicate threshold.
    pub fn duplicate_pair(&self) -> Option<(usize, usize)> {
        first_duplicate(&self.elements)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<ComplexMatrix> {
        self.elements
    }

    /// Rate `log₂(L)/T` in bits per channel use.
    pub fn rate(&self) -> f64 {
        (self.len() as f64).log2() / self.t as f64
    }

    pub fn pair_count(&self) -> usize {
        self.len() * (self.len() - 1) / 2
    }
}

pub(crate) fn first_duplicate(elements: &[ComplexMatrix]) -> Option<(usize, usize)> {
    let tol = tolerances().duplicate;
    for i in 0..elements.len() {
        for j in i + 1..elements.len() {
            if elements[i].distance(&elements[j]) < tol {
                return Some((i, j));
            }
        }
    }
    None
}

/// Constellation of square unitaries `Ψ_k`, lifted to frames
/// `Φ_k = (√2/2)[I; Ψ_k]` for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareConstellation {
    m: usize,
    elements: Vec<ComplexMatrix>,
}

impl SquareConstellation {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let first = elements.first().ok_or(MetricsError::TooFew(0))?;
        let m = first.rows();
        let tol = tolerances().unitarity;
        for (index, e) in elements.iter().enumerate() {
            if e.shape() != (m, m) {
                return Err(MetricsError::ShapeMismatch((m, m), e.shape()));
            }
            let defect = e.frame_defect();
            if defect.is_nan() || defect > tol {
                return Err(MetricsError::NotFrame { index, defect });
            }
        }
        Ok(Self { m, elements })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn duplicate_pair(&self) -> Option<(usize, usize)> {
        first_duplicate(&self.elements)
    }

    /// Frames `(√2/2)[I_M; Ψ_k]` with `T = 2M`.
    pub fn lift(&self) -> Result<Constellation> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let top = ComplexMatrix::identity(self.m).scale_re(s);
        let frames = self
            .elements
            .iter()
            .map(|psi| top.vstack(&psi.scale_re(s)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Constellation::new(frames)
    }

    /// Differential rate `log₂(L)/M`.
    pub fn differential_rate(&self) -> f64 {
        (self.len() as f64).log2() / self.m as f64
    }
}

/// Linear SNR together with the derived `ρ̃ = (ρT/M)² / (4(1 + ρT/M))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    pub rho: f64,
    pub rho_tilde: f64,
}

impl SnrPoint {
    pub fn new(rho: f64, t: usize, m: usize) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(MetricsError::BadSnr(rho));
        }
        let g = rho * t as f64 / m as f64;
        Ok(Self {
            rho,
            rho_tilde: g * g / (4.0 * (1.0 + g)),
        })
    }

    pub fn from_db(db: f64, t: usize, m: usize) -> Result<Self> {
        Self::new(db_to_linear(db), t, m)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn check_pair(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(MetricsError::ShapeMismatch(a.shape(), b.shape()));
    }
    Ok(())
}

const GAP_FLOOR: f64 = 1e-15;

/// Per-pair gaps `1 − δ_m²`, ascending; gaps below 1e-15 are set to zero.
pub fn pair_gaps(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    Ok(complement_gaps(&complement(a, b)))
}

/// Part of `Φ_b` orthogonal to the span of `Φ_a`, in coordinates of an
/// orthonormal basis of that complement: a `(T − M) × M` block `Z` with
/// `Z*Z = I − X*X`, `X = Φ_a*Φ_b`.
///
/// Working with `Z` avoids the cancellation in `1 − δ²` when the frames
/// nearly coincide, and its shape carries the rank bound `T − M`: for
/// `T < 2M` the DP distance is zero by construction. The singular values of
/// `Z` are the sines of the principal angles.
pub fn complement(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    orthogonal_component(a, b)
}

/// Gaps `1 − δ_m² = σ_m(Z)²`, ascending.
pub fn complement_gaps(z: &ComplexMatrix) -> Vec<f64> {
    let gram = z.adjoint() * z;
    let vals = hermitian_eig(&gram)
        .map(|e| e.values)
        .unwrap_or_else(|_| gram.diagonal().iter().map(|v| v.re).collect());
    let mut gaps: Vec<f64> = vals.into_iter().map(|l| floor_gap(l.clamp(0.0, 1.0))).collect();
    gaps.reverse();
    gaps
}

/// Gaps from a lifted difference `D = Ψ_a − Ψ_b`: `1 − δ_m² = σ_m(D)²/4`.
pub fn difference_gaps(d: &ComplexMatrix) -> Vec<f64> {
    let gram = d.adjoint() * d;
    let vals = hermitian_eig(&gram)
        .map(|e| e.values)
        .unwrap_or_else(|_| gram.diagonal().iter().map(|z| z.re).collect());
    let mut gaps: Vec<f64> = vals
        .into_iter()
        .map(|l| floor_gap((0.25 * l).clamp(0.0, 1.0)))
        .collect();
    gaps.reverse();
    gaps
}

#[inline]
fn floor_gap(g: f64) -> f64 {
    if g < GAP_FLOOR {
        0.0
    } else {
        g
    }
}

/// Pair DP distance `(Π_m (1 − δ_m²))^{1/2M}`.
pub fn pair_dp_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    check_pair(a, b)?;
    Ok(complement_dp(&complement(a, b)))
}

/// DP distance `det(Z*Z)^{1/2M}` of a complement block.
pub fn complement_dp(z: &ComplexMatrix) -> f64 {
    let m = z.cols();
    let vol = column_volume(z);
    // Π σ below the gap floor means a coincident direction
    if vol * vol < GAP_FLOOR.powi(m as i32) && complement_gaps(z)[0] == 0.0 {
        return 0.0;
    }
    vol.min(1.0).powf(1.0 / m as f64)
}

/// Pair DS distance `sqrt(1 − ‖Φ_a*Φ_b‖_F²/M)`.
pub fn pair_ds_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    check_pair(a, b)?;
    Ok(complement_ds(&complement(a, b)))
}

/// DS distance `‖Z‖_F/√M`, equal to `sqrt(1 − ‖X‖_F²/M)` for frames.
pub fn complement_ds(z: &ComplexMatrix) -> f64 {
    let m = z.cols() as f64;
    (z.frobenius_norm_sqr() / m).min(1.0).sqrt()
}

/// Lifted-form DP distance `½|det(D)|^{1/M}` of a difference `D = Ψ_a − Ψ_b`.
pub fn difference_dp(d: &ComplexMatrix) -> f64 {
    let m = d.rows() as f64;
    let det = determinant(d).map(|z| z.norm()).unwrap_or(0.0);
    (0.5 * det.powf(1.0 / m)).min(1.0)
}

/// Lifted-form DS distance `‖D‖_F / (2√M)`.
pub fn difference_ds(d: &ComplexMatrix) -> f64 {
    let m = d.rows() as f64;
    (d.frobenius_norm() / (2.0 * m.sqrt())).min(1.0)
}

/// Chernoff term `½ Π_m [1 + ρ̃·gap_m]^{−N}`.
pub fn chernoff_term(gaps: &[f64], n_rx: usize, rho_tilde: f64) -> f64 {
    let n = n_rx as i32;
    0.5 * gaps
        .iter()
        .map(|g| (1.0 + rho_tilde * g).powi(-n))
        .product::<f64>()
}

/// Exact pairwise error probability as a function of the gaps.
///
/// With `2w = tan θ` the improper integral
/// `(1/4π)∫ 4/(4w²+1) Π_m[1 + ρ̃ g_m (4w²+1)]^{−N} dw` becomes
/// `(1/π)∫_0^{π/2} Π_m [cos²θ / (cos²θ + ρ̃ g_m)]^N dθ`.
pub fn exact_pep_from_gaps(gaps: &[f64], n_rx: usize, rho_tilde: f64) -> Result<f64> {
    let coeffs: Vec<f64> = gaps.iter().map(|g| rho_tilde * g).filter(|&a| a > 0.0).collect();
    if coeffs.is_empty() {
        return Ok(0.5);
    }
    let n = n_rx as i32;
    let integrand = |t: f64| {
        let c2 = t.cos().powi(2);
        coeffs.iter().map(|a| (c2 / (c2 + a)).powi(n)).product::<f64>()
    };
    let tol = tolerances();
    let pi = std::f64::consts::PI;
    let res = quad::integrate(
        integrand,
        0.0,
        0.5 * pi,
        tol.quadrature_abs * pi,
        tol.quadrature_max_depth,
    );
    let value = res.value / pi;
    if res.converged {
        Ok(value)
    } else {
        Err(MetricsError::QuadratureFailed { partial: value })
    }
}

/// Exact pairwise error probability of two frames.
pub fn exact_pep(a: &ComplexMatrix, b: &ComplexMatrix, n_rx: usize, snr: SnrPoint) -> Result<f64> {
    if n_rx == 0 {
        return Err(MetricsError::NoReceiveAntennas);
    }
    let gaps = pair_gaps(a, b)?;
    exact_pep_from_gaps(&gaps, n_rx, snr.rho_tilde)
}

/// Chernoff term of a single pair of frames.
pub fn pair_chernoff(a: &ComplexMatrix, b: &ComplexMatrix, n_rx: usize, snr: SnrPoint) -> Result<f64> {
    if n_rx == 0 {
        return Err(MetricsError::NoReceiveAntennas);
    }
    Ok(chernoff_term(&pair_gaps(a, b)?, n_rx, snr.rho_tilde))
}

/// Evaluates `f` on every pair `i < j`, in lexicographic order.
fn pair_values<T, F>(v: &Constellation, f: F) -> Vec<((usize, usize), T)>
where
    T: Send,
    F: Fn(&ComplexMatrix, &ComplexMatrix) -> T + Sync,
{
    let el = v.elements();
    (0..el.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let f = &f;
            (i + 1..el.len()).map(move |j| ((i, j), f(&el[i], &el[j])))
        })
        .collect()
}

fn argmin(values: &[((usize, usize), f64)]) -> (f64, (usize, usize)) {
    values
        .iter()
        .fold((f64::INFINITY, (0, 0)), |acc, &(ij, d)| if d < acc.0 { (d, ij) } else { acc })
}

fn argmax(values: &[((usize, usize), f64)]) -> (f64, (usize, usize)) {
    values
        .iter()
        .fold((f64::NEG_INFINITY, (0, 0)), |acc, &(ij, d)| if d > acc.0 { (d, ij) } else { acc })
}

/// Diversity product and the first pair attaining it.
pub fn diversity_product(v: &Constellation) -> (f64, (usize, usize)) {
    argmin(&pair_values(v, |a, b| complement_dp(&complement(a, b))))
}

/// Diversity sum and the first pair attaining it.
pub fn diversity_sum(v: &Constellation) -> (f64, (usize, usize)) {
    argmin(&pair_values(v, |a, b| complement_ds(&complement(a, b))))
}

/// Chernoff-bound diversity function: the worst pair's bound on the
/// pairwise error probability. A duplicated element yields the degenerate ½.
pub fn diversity_function(v: &Constellation, n_rx: usize, snr: SnrPoint) -> Result<f64> {
    if n_rx == 0 {
        return Err(MetricsError::NoReceiveAntennas);
    }
    let rt = snr.rho_tilde;
    let vals = pair_values(v, |a, b| chernoff_term(&complement_gaps(&complement(a, b)), n_rx, rt));
    Ok(argmax(&vals).0)
}

/// Exact diversity function: the worst pair's exact error probability.
pub fn exact_diversity_function(v: &Constellation, n_rx: usize, snr: SnrPoint) -> Result<f64> {
    if n_rx == 0 {
        return Err(MetricsError::NoReceiveAntennas);
    }
    let el = v.elements();
    let rt = snr.rho_tilde;
    let peps: Vec<Result<f64>> = (0..el.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..el.len()).map(move |j| exact_pep_from_gaps(&complement_gaps(&complement(&el[i], &el[j])), n_rx, rt))
        })
        .collect();
    let mut worst = f64::NEG_INFINITY;
    let mut failed = false;
    for p in peps {
        match p {
            Ok(x) => worst = worst.max(x),
            Err(MetricsError::QuadratureFailed { partial }) => {
                failed = true;
                worst = worst.max(partial);
            }
            Err(e) => return Err(e),
        }
    }
    if failed {
        Err(MetricsError::QuadratureFailed { partial: worst })
    } else {
        Ok(worst)
    }
}

/// Distances rounded to four decimals, with multiplicities, ascending.
pub type Spectrum = Vec<(f64, usize)>;

/// DP/DS extrema together with both distance spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityReport {
    pub dp: f64,
    pub ds: f64,
    pub dp_argmin: (usize, usize),
    pub ds_argmin: (usize, usize),
    pub spectrum_dp: Spectrum,
    pub spectrum_ds: Spectrum,
    pub pair_count: usize,
}

pub fn spectrum_key(d: f64) -> i64 {
    (d * 1e4).round() as i64
}

fn bin(values: &[((usize, usize), f64)]) -> Spectrum {
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for &(_, d) in values {
        *bins.entry(spectrum_key(d)).or_default() += 1;
    }
    bins.into_iter().map(|(k, n)| (k as f64 / 1e4, n)).collect()
}

/// Both distance spectra plus DP/DS in one pass over the pairs.
pub fn distance_spectrum(v: &Constellation) -> DiversityReport {
    let both = pair_values(v, |a, b| {
        let z = complement(a, b);
        (complement_dp(&z), complement_ds(&z))
    });
    let dp_vals: Vec<_> = both.iter().map(|&(ij, (dp, _))| (ij, dp)).collect();
    let ds_vals: Vec<_> = both.iter().map(|&(ij, (_, ds))| (ij, ds)).collect();
    let (dp, dp_argmin) = argmin(&dp_vals);
    let (ds, ds_argmin) = argmin(&ds_vals);
    DiversityReport {
        dp,
        ds,
        dp_argmin,
        ds_argmin,
        spectrum_dp: bin(&dp_vals),
        spectrum_ds: bin(&ds_vals),
        pair_count: v.pair_count(),
    }
}
