//! Structure-exploiting differential demodulator for `A^k`, `A^k B^k` and
//! `A^k B^l` constellations.
//!
//! With `A = U diag(e^{iα}) U*` and `B = V diag(e^{iβ}) V*`,
//!
//! ```text
//! ‖Y − A^k B^l Y'‖² = ‖Y‖² + ‖Y'‖² − 2 Re Σ_{m,n} c_mn e^{i(kα_m + lβ_n)}
//! c_mn = (U*V)_mn · (V* Y' Y* U)_nm
//! ```
//!
//! so after a constant number of M×M products per block every candidate
//! costs O(M²) scalar operations, independent of the constellation size.

use thiserror::Error;

use crate::linalg::{unitary_eig, ComplexMatrix, LinalgError, UnitaryEig, C64};
use crate::structures::{StructureError, StructureKind, StructureSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FastDecError {
    #[error("fast decoding is not available for {0}")]
    Unsupported(StructureKind),
    #[error("received blocks must both be {m}xN with equal N, got {prev:?} and {curr:?}")]
    Shape {
        m: usize,
        prev: (usize, usize),
        curr: (usize, usize),
    },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, FastDecError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    /// `A^k`, k = 0..L−1.
    Cyclic { len: usize },
    /// `A^k B^k`, k = 0..L−1.
    Weak { len: usize },
    /// `A^k B^l`, k = 0..=p, l = 0..=q; index `k(q+1) + l`.
    Product { p: usize, q: usize },
}

/// Precomputed eigen-structure of the generators.
#[derive(Debug, Clone)]
pub struct DecoderTables {
    layout: Layout,
    m: usize,
    pub eig_a: UnitaryEig,
    pub eig_b: Option<UnitaryEig>,
    /// `U*V`, or the identity for cyclic constellations.
    basis_overlap: ComplexMatrix,
    /// `e^{ikα_m}` for every admissible k (row-major, M per row).
    phase_a: Vec<C64>,
    /// `e^{ilβ_n}` for every admissible l.
    phase_b: Vec<C64>,
}

fn phase_table(angles: &[f64], count: usize) -> Vec<C64> {
    (0..count)
        .flat_map(|k| angles.iter().map(move |&t| C64::from_polar(1.0, (k as f64 * t).rem_euclid(std::f64::consts::TAU))))
        .collect()
}

/// Eigendecomposes the generators of a cyclic, weak-group (including the
/// geometric families) or two-generator product spec.
pub fn build_tables(spec: &StructureSpec) -> Result<DecoderTables> {
    spec.validate()?;
    let gens = spec.generators();
    let m = gens[0].rows();
    let layout = match *spec {
        StructureSpec::Cyclic { len, .. } => Layout::Cyclic { len },
        StructureSpec::WeakGroup { len, .. }
        | StructureSpec::Geometric2 { len, .. }
        | StructureSpec::Geometric3 { len, .. } => Layout::Weak { len },
        StructureSpec::Product2 { p, q, .. } => Layout::Product { p, q },
        _ => return Err(FastDecError::Unsupported(spec.kind())),
    };
    let eig_a = unitary_eig(&gens[0])?;
    let eig_b = match layout {
        Layout::Cyclic { .. } => None,
        _ => Some(unitary_eig(&gens[1])?),
    };
    let (rows_a, rows_b) = match layout {
        Layout::Cyclic { len } => (len, 1),
        Layout::Weak { len } => (len, len),
        Layout::Product { p, q } => (p + 1, q + 1),
    };
    let basis_overlap = match &eig_b {
        Some(b) => &eig_a.basis.adjoint() * &b.basis,
        None => ComplexMatrix::identity(m),
    };
    let phase_a = phase_table(&eig_a.angles, rows_a);
    let phase_b = match &eig_b {
        Some(b) => phase_table(&b.angles, rows_b),
        None => vec![C64::new(1.0, 0.0); m],
    };
    Ok(DecoderTables {
        layout,
        m,
        eig_a,
        eig_b,
        basis_overlap,
        phase_a,
        phase_b,
    })
}

impl DecoderTables {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of constellation elements.
    pub fn len(&self) -> usize {
        match self.layout {
            Layout::Cyclic { len } | Layout::Weak { len } => len,
            Layout::Product { p, q } => (p + 1) * (q + 1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exponents `(k, l)` of element `index`.
    pub fn exponents(&self, index: usize) -> (usize, usize) {
        match self.layout {
            Layout::Cyclic { .. } => (index, 0),
            Layout::Weak { .. } => (index, index),
            Layout::Product { q, .. } => (index / (q + 1), index % (q + 1)),
        }
    }

    /// Element `index` rebuilt from the eigendecompositions.
    pub fn element(&self, index: usize) -> ComplexMatrix {
        let (k, l) = self.exponents(index);
        let ak = self.eig_a.power(k as i64);
        match &self.eig_b {
            None => ak,
            Some(b) => &ak * &b.power(l as i64),
        }
    }
}

/// Operation counts of one decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    /// Dense matrix products (M×N·N×M or M×M·M×M) performed.
    pub matrix_products: usize,
    /// Candidates whose correlation was evaluated.
    pub candidates: usize,
    /// Candidates skipped by the bound.
    pub pruned: usize,
}

impl DecodeStats {
    pub fn add(&mut self, other: &DecodeStats) {
        self.matrix_products += other.matrix_products;
        self.candidates += other.candidates;
        self.pruned += other.pruned;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecodeOptions {
    /// Radius mode: stop at the first candidate whose squared residual is
    /// at most this value. Off by default, in which case the result is the
    /// exact ML decision.
    pub radius_sqr: Option<f64>,
}

/// Default radius `C = MN(1 + 2/√ρ)` for radius mode.
pub fn default_radius_sqr(m: usize, n: usize, rho: f64) -> f64 {
    (m * n) as f64 * (1.0 + 2.0 / rho.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    /// Element index in expansion order.
    pub index: usize,
    pub k: usize,
    pub l: usize,
    /// `‖Y − Ψ Y'‖²` of the decision.
    pub residual_sqr: f64,
}

/// ML decision `argmin ‖y_curr − Ψ y_prev‖_F`, ties to the smallest index.
pub fn fast_decode(tables: &DecoderTables, y_prev: &ComplexMatrix, y_curr: &ComplexMatrix) -> Result<Decision> {
    let mut stats = DecodeStats::default();
    fast_decode_with(tables, y_prev, y_curr, DecodeOptions::default(), &mut stats)
}

pub fn fast_decode_with(
    tables: &DecoderTables,
    y_prev: &ComplexMatrix,
    y_curr: &ComplexMatrix,
    opts: DecodeOptions,
    stats: &mut DecodeStats,
) -> Result<Decision> {
    let m = tables.m;
    if y_prev.rows() != m || y_curr.shape() != y_prev.shape() {
        return Err(FastDecError::Shape {
            m,
            prev: y_prev.shape(),
            curr: y_curr.shape(),
        });
    }
    let energy = y_prev.frobenius_norm_sqr() + y_curr.frobenius_norm_sqr();

    // c_mn = G_mn · W_nm with W = V* Y' Y* U
    let outer = y_prev * &y_curr.adjoint();
    let u = &tables.eig_a.basis;
    let w = match &tables.eig_b {
        Some(b) => &(&b.basis.adjoint() * &outer) * u,
        None => &(&u.adjoint() * &outer) * u,
    };
    stats.matrix_products += 3;
    let g = &tables.basis_overlap;
    let mut c = vec![C64::new(0.0, 0.0); m * m];
    for r in 0..m {
        for s in 0..m {
            c[r * m + s] = g[(r, s)] * w[(s, r)];
        }
    }

    let mut best = (f64::NEG_INFINITY, 0usize);
    let radius_hit = |corr: f64| opts.radius_sqr.is_some_and(|r| energy - 2.0 * corr <= r);
    let finish = |(corr, index): (f64, usize)| {
        let (k, l) = tables.exponents(index);
        Decision {
            index,
            k,
            l,
            residual_sqr: (energy - 2.0 * corr).max(0.0),
        }
    };

    match tables.layout {
        Layout::Cyclic { len } => {
            // only the diagonal of c contributes
            for k in 0..len {
                let pa = &tables.phase_a[k * m..(k + 1) * m];
                let corr: f64 = (0..m).map(|i| (c[i * m + i] * pa[i]).re).sum();
                stats.candidates += 1;
                if corr > best.0 {
                    best = (corr, k);
                    if radius_hit(corr) {
                        return Ok(finish(best));
                    }
                }
            }
        }
        Layout::Weak { len } => {
            for k in 0..len {
                let pa = &tables.phase_a[k * m..(k + 1) * m];
                let pb = &tables.phase_b[k * m..(k + 1) * m];
                let mut corr = 0.0;
                for i in 0..m {
                    let row: C64 = (0..m).map(|j| c[i * m + j] * pb[j]).sum();
                    corr += (row * pa[i]).re;
                }
                stats.candidates += 1;
                if corr > best.0 {
                    best = (corr, k);
                    if radius_hit(corr) {
                        return Ok(finish(best));
                    }
                }
            }
        }
        Layout::Product { p, q } => {
            let mut h = vec![C64::new(0.0, 0.0); m];
            for k in 0..=p {
                let pa = &tables.phase_a[k * m..(k + 1) * m];
                for (j, hj) in h.iter_mut().enumerate() {
                    *hj = (0..m).map(|i| c[i * m + j] * pa[i]).sum();
                }
                // Re Σ h_j e^{ilβ_j} ≤ Σ |h_j| for every l
                let bound: f64 = h.iter().map(|z| z.norm()).sum();
                if bound <= best.0 {
                    stats.pruned += q + 1;
                    continue;
                }
                for l in 0..=q {
                    let pb = &tables.phase_b[l * m..(l + 1) * m];
                    let corr: f64 = (0..m).map(|j| (h[j] * pb[j]).re).sum();
                    stats.candidates += 1;
                    if corr > best.0 {
                        best = (corr, k * (q + 1) + l);
                        if radius_hit(corr) {
                            return Ok(finish(best));
                        }
                    }
                }
            }
        }
    }
    Ok(finish(best))
}

/// Reference ML decision by direct evaluation of every residual.
pub fn exhaustive_decode(elements: &[ComplexMatrix], y_prev: &ComplexMatrix, y_curr: &ComplexMatrix) -> (usize, f64) {
    let mut scratch = ComplexMatrix::zeros(y_prev.rows(), y_prev.cols());
    let mut best = (0, f64::INFINITY);
    for (z, psi) in elements.iter().enumerate() {
        psi.mul_into(y_prev, &mut scratch);
        let r: f64 = y_curr
            .as_slice()
            .iter()
            .zip(scratch.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        if r < best.1 {
            best = (z, r);
        }
    }
    best
}
