//! Structured constellation families.
//!
//! Every family is a short list of unitary generators plus exponent ranges:
//!
//! | kind          | elements                                   | size            |
//! |---------------|--------------------------------------------|-----------------|
//! | `cyclic`      | `A^k`, k = 0..L−1                          | L               |
//! | `weak_group`  | `A^k B^k`, k = 0..L−1                      | L               |
//! | `product2`    | `A^k B^l`, k = 0..=p, l = 0..=q            | (p+1)(q+1)      |
//! | `product3`    | `A^k B^l C^n`, k = 0..=p, l = 0..=q, n = 0..=r | (p+1)(q+1)(r+1) |
//! | `geometric2`  | weak group with `A = diag(e^{ix}, e^{iy})`, `B` a rotation by `z` | L |
//! | `geometric3`  | weak group with the 3×3 rotation/phase generators | L        |
//! | `general_form`| first M columns of `A^k`, A ∈ U(T)         | L               |
//!
//! For the cyclic, weak-group, product and general forms the pairwise
//! distances collapse onto a small set of representatives (for a weak group,
//! `Ψ_i^{-1}Ψ_j` is unitarily similar to `A^{j−i}B^{j−i}`), which is what
//! [`reduced_diversity`] evaluates.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::{nearest_unitary, ComplexMatrix, LinalgError, C64};
use crate::metrics::{
    chernoff_term, complement_dp, complement_ds, complement_gaps, difference_dp, difference_ds, difference_gaps,
    Constellation, MetricsError, SnrPoint, SquareConstellation,
};
use crate::tol::tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("generator {index} is not unitary (defect {defect:.3e})")]
    NotUnitary { index: usize, defect: f64 },
    #[error("generator shapes are inconsistent")]
    ShapeMismatch,
    #[error("structure must produce at least 2 elements")]
    TooSmall,
    #[error("general form needs M between 1 and T, got M={m}, T={t}")]
    BadFrameWidth { t: usize, m: usize },
    #[error("reduced evaluation is not available for {0}")]
    Unsupported(StructureKind),
    #[error("expected {expected} generators for {kind}, got {got}")]
    GeneratorCount {
        kind: StructureKind,
        expected: usize,
        got: usize,
    },
    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, StructureError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    Cyclic,
    WeakGroup,
    Product2,
    Product3,
    Geometric2,
    Geometric3,
    GeneralForm,
}

impl StructureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cyclic => "cyclic",
            Self::WeakGroup => "weak_group",
            Self::Product2 => "product2",
            Self::Product3 => "product3",
            Self::Geometric2 => "geometric2",
            Self::Geometric3 => "geometric3",
            Self::GeneralForm => "general_form",
        }
    }

    /// Number of generator matrices the kind carries.
    pub fn generator_count(self) -> usize {
        match self {
            Self::Cyclic | Self::GeneralForm => 1,
            Self::WeakGroup | Self::Product2 | Self::Geometric2 | Self::Geometric3 => 2,
            Self::Product3 => 3,
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StructureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.replace('-', "_").as_str() {
            "cyclic" => Self::Cyclic,
            "weak_group" => Self::WeakGroup,
            "product2" => Self::Product2,
            "product3" => Self::Product3,
            "geometric2" => Self::Geometric2,
            "geometric3" => Self::Geometric3,
            "general_form" => Self::GeneralForm,
            other => return Err(format!("unknown structure kind `{other}`")),
        })
    }
}

/// Symbolic description of a structured constellation.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureSpec {
    Cyclic {
        a: ComplexMatrix,
        len: usize,
    },
    WeakGroup {
        a: ComplexMatrix,
        b: ComplexMatrix,
        len: usize,
    },
    /// `A^k B^l` with `k = 0..=p`, `l = 0..=q`, ordered with `k` major.
    Product2 {
        a: ComplexMatrix,
        b: ComplexMatrix,
        p: usize,
        q: usize,
    },
    Product3 {
        a: ComplexMatrix,
        b: ComplexMatrix,
        c: ComplexMatrix,
        p: usize,
        q: usize,
        r: usize,
    },
    Geometric2 {
        x: f64,
        y: f64,
        z: f64,
        len: usize,
    },
    Geometric3 {
        x: f64,
        y: f64,
        z: f64,
        w: f64,
        len: usize,
    },
    /// Frames `A^k [I_M; 0]` with `A` a T×T unitary.
    GeneralForm {
        a: ComplexMatrix,
        m: usize,
        len: usize,
    },
}

/// `A = diag(e^{ix}, e^{iy})`, `B = [[cos z, sin z], [−sin z, cos z]]`.
pub fn geometric2_generators(x: f64, y: f64, z: f64) -> (ComplexMatrix, ComplexMatrix) {
    let a = ComplexMatrix::from_diag(&[C64::from_polar(1.0, x), C64::from_polar(1.0, y)]);
    (a, rotation2(z))
}

fn rotation2(z: f64) -> ComplexMatrix {
    let (s, c) = z.sin_cos();
    ComplexMatrix::from_rows(&[
        vec![C64::new(c, 0.0), C64::new(s, 0.0)],
        vec![C64::new(-s, 0.0), C64::new(c, 0.0)],
    ])
}

/// Three-dimensional rotation/phase generators of the geometric family.
pub fn geometric3_generators(x: f64, y: f64, z: f64, w: f64) -> (ComplexMatrix, ComplexMatrix) {
    let zero = C64::new(0.0, 0.0);
    let r = |v: f64| C64::new(v, 0.0);
    let (sx, cx) = x.sin_cos();
    let (sw, cw) = w.sin_cos();
    let a = ComplexMatrix::from_rows(&[
        vec![r(cx), r(sx), zero],
        vec![r(-sx), r(cx), zero],
        vec![zero, zero, C64::from_polar(1.0, y)],
    ]);
    let b = ComplexMatrix::from_rows(&[
        vec![C64::from_polar(1.0, z), zero, zero],
        vec![zero, r(cw), r(sw)],
        vec![zero, r(-sw), r(cw)],
    ]);
    (a, b)
}

impl StructureSpec {
    pub fn kind(&self) -> StructureKind {
        match self {
            Self::Cyclic { .. } => StructureKind::Cyclic,
            Self::WeakGroup { .. } => StructureKind::WeakGroup,
            Self::Product2 { .. } => StructureKind::Product2,
            Self::Product3 { .. } => StructureKind::Product3,
            Self::Geometric2 { .. } => StructureKind::Geometric2,
            Self::Geometric3 { .. } => StructureKind::Geometric3,
            Self::GeneralForm { .. } => StructureKind::GeneralForm,
        }
    }

    /// Number of elements this structure expands to.
    pub fn size(&self) -> usize {
        match *self {
            Self::Cyclic { len, .. }
            | Self::WeakGroup { len, .. }
            | Self::Geometric2 { len, .. }
            | Self::Geometric3 { len, .. }
            | Self::GeneralForm { len, .. } => len,
            Self::Product2 { p, q, .. } => (p + 1) * (q + 1),
            Self::Product3 { p, q, r, .. } => (p + 1) * (q + 1) * (r + 1),
        }
    }

    /// Antenna count M.
    pub fn m(&self) -> usize {
        match self {
            Self::Geometric2 { .. } => 2,
            Self::Geometric3 { .. } => 3,
            Self::GeneralForm { m, .. } => *m,
            Self::Cyclic { a, .. }
            | Self::WeakGroup { a, .. }
            | Self::Product2 { a, .. }
            | Self::Product3 { a, .. } => a.rows(),
        }
    }

    /// Block length of the evaluated frames: 2M for the square families,
    /// T for the general form.
    pub fn t(&self) -> usize {
        match self {
            Self::GeneralForm { a, .. } => a.rows(),
            _ => 2 * self.m(),
        }
    }

    /// Generator matrices; angle families are expanded.
    pub fn generators(&self) -> Vec<ComplexMatrix> {
        match self {
            Self::Cyclic { a, .. } | Self::GeneralForm { a, .. } => vec![a.clone()],
            Self::WeakGroup { a, b, .. } | Self::Product2 { a, b, .. } => vec![a.clone(), b.clone()],
            Self::Product3 { a, b, c, .. } => vec![a.clone(), b.clone(), c.clone()],
            &Self::Geometric2 { x, y, z, .. } => {
                let (a, b) = geometric2_generators(x, y, z);
                vec![a, b]
            }
            &Self::Geometric3 { x, y, z, w, .. } => {
                let (a, b) = geometric3_generators(x, y, z, w);
                vec![a, b]
            }
        }
    }

    /// Same sizes, new generators. Angle families become plain weak groups.
    pub fn with_generators(&self, gens: Vec<ComplexMatrix>) -> Result<Self> {
        let kind = self.kind();
        if gens.len() != kind.generator_count() {
            return Err(StructureError::GeneratorCount {
                kind,
                expected: kind.generator_count(),
                got: gens.len(),
            });
        }
        let mut it = gens.into_iter();
        let mut next = || it.next().expect("count checked");
        let spec = match *self {
            Self::Cyclic { len, .. } => Self::Cyclic { a: next(), len },
            Self::WeakGroup { len, .. } | Self::Geometric2 { len, .. } | Self::Geometric3 { len, .. } => {
                Self::WeakGroup {
                    a: next(),
                    b: next(),
                    len,
                }
            }
            Self::Product2 { p, q, .. } => Self::Product2 {
                a: next(),
                b: next(),
                p,
                q,
            },
            Self::Product3 { p, q, r, .. } => Self::Product3 {
                a: next(),
                b: next(),
                c: next(),
                p,
                q,
                r,
            },
            Self::GeneralForm { m, len, .. } => Self::GeneralForm { a: next(), m, len },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Angle families rewritten as explicit weak groups; others unchanged.
    pub fn to_explicit(&self) -> Self {
        match self {
            Self::Geometric2 { len, .. } | Self::Geometric3 { len, .. } => {
                let g = self.generators();
                Self::WeakGroup {
                    a: g[0].clone(),
                    b: g[1].clone(),
                    len: *len,
                }
            }
            other => other.clone(),
        }
    }

    /// Checks generator unitarity, shape agreement and minimum size.
    pub fn validate(&self) -> Result<()> {
        if self.size() < 2 {
            return Err(StructureError::TooSmall);
        }
        if let Self::GeneralForm { a, m, .. } = self {
            if *m == 0 || *m > a.rows() {
                return Err(StructureError::BadFrameWidth { t: a.rows(), m: *m });
            }
        }
        let gens = self.generators();
        let n = gens[0].rows();
        let tol = tolerances().unitarity;
        for (index, g) in gens.iter().enumerate() {
            if g.shape() != (n, n) {
                return Err(StructureError::ShapeMismatch);
            }
            let defect = g.frame_defect();
            if defect.is_nan() || defect > tol {
                return Err(StructureError::NotUnitary { index, defect });
            }
        }
        Ok(())
    }
}

/// Powers `g^0 … g^n` by repeated multiplication.
fn powers(g: &ComplexMatrix, n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(ComplexMatrix::identity(g.rows()));
    for k in 1..=n {
        let next = &out[k - 1] * g;
        out.push(next);
    }
    out
}

/// Result of expanding a spec.
#[derive(Debug, Clone, PartialEq)]
pub enum Expanded {
    Square(SquareConstellation),
    Frames(Constellation),
}

impl Expanded {
    /// Frames used for evaluation (square constellations are lifted).
    pub fn frames(&self) -> Result<Constellation> {
        match self {
            Self::Square(s) => Ok(s.lift()?),
            Self::Frames(c) => Ok(c.clone()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Square(s) => s.len(),
            Self::Frames(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First pair of coincident elements, if the expansion is degenerate.
    pub fn duplicate_pair(&self) -> Option<(usize, usize)> {
        match self {
            Self::Square(s) => s.duplicate_pair(),
            Self::Frames(c) => c.duplicate_pair(),
        }
    }

    pub fn as_square(&self) -> Option<&SquareConstellation> {
        match self {
            Self::Square(s) => Some(s),
            Self::Frames(_) => None,
        }
    }
}

/// Ordered element list of a square family.
pub fn expand_square(spec: &StructureSpec) -> Result<Vec<ComplexMatrix>> {
    spec.validate()?;
    let gens = spec.generators();
    let elements = match *spec {
        StructureSpec::Cyclic { len, .. } => powers(&gens[0], len - 1),
        StructureSpec::WeakGroup { len, .. }
        | StructureSpec::Geometric2 { len, .. }
        | StructureSpec::Geometric3 { len, .. } => {
            let pa = powers(&gens[0], len - 1);
            let pb = powers(&gens[1], len - 1);
            pa.iter().zip(&pb).map(|(x, y)| x * y).collect()
        }
        StructureSpec::Product2 { p, q, .. } => {
            let pa = powers(&gens[0], p);
            let pb = powers(&gens[1], q);
            pa.iter()
                .flat_map(|x| pb.iter().map(move |y| x * y))
                .collect()
        }
        StructureSpec::Product3 { p, q, r, .. } => {
            let pa = powers(&gens[0], p);
            let pb = powers(&gens[1], q);
            let pc = powers(&gens[2], r);
            let mut out = Vec::with_capacity(spec.size());
            for x in &pa {
                for y in &pb {
                    let xy = x * y;
                    for z in &pc {
                        out.push(&xy * z);
                    }
                }
            }
            out
        }
        StructureSpec::GeneralForm { .. } => {
            return Err(StructureError::Unsupported(StructureKind::GeneralForm))
        }
    };
    Ok(elements)
}

/// Expands a spec into its ordered element list. Degenerate expansions
/// (coincident elements) are returned as-is; check
/// [`Expanded::duplicate_pair`].
pub fn expand(spec: &StructureSpec) -> Result<Expanded> {
    match spec {
        StructureSpec::GeneralForm { a, m, len } => {
            spec.validate()?;
            let t = a.rows();
            let frames = powers(a, len - 1)
                .into_iter()
                .map(|p| p.block(0, 0, t, *m))
                .collect();
            Ok(Expanded::Frames(Constellation::new(frames)?))
        }
        _ => Ok(Expanded::Square(SquareConstellation::new(expand_square(spec)?)?)),
    }
}

/// `(√2/2)[I; Ψ_k]` lift of a square constellation.
pub fn lift(sq: &SquareConstellation) -> Result<Constellation> {
    Ok(sq.lift()?)
}

/// One representative pair distance of a structured family.
#[derive(Debug, Clone)]
pub enum Representative {
    /// A difference `Ψ_i − Ψ_j` up to unitary factors on both sides.
    Difference(ComplexMatrix),
    /// The part of `Φ_j` orthogonal to `Φ_i`, up to unitary factors.
    Complement(ComplexMatrix),
}

impl Representative {
    pub fn dp(&self) -> f64 {
        match self {
            Self::Difference(d) => difference_dp(d),
            Self::Complement(z) => complement_dp(z),
        }
    }

    pub fn ds(&self) -> f64 {
        match self {
            Self::Difference(d) => difference_ds(d),
            Self::Complement(z) => complement_ds(z),
        }
    }

    /// Gaps `1 − δ_m²` of the represented pair.
    pub fn gaps(&self) -> Vec<f64> {
        match self {
            Self::Difference(d) => difference_gaps(d),
            Self::Complement(z) => complement_gaps(z),
        }
    }
}

/// The reduced set of pair representatives: every pairwise distance of the
/// expanded constellation equals the distance of one representative, and
/// every representative is realized by some pair.
pub fn representatives(spec: &StructureSpec) -> Result<Vec<Representative>> {
    spec.validate()?;
    let gens = spec.generators();
    let id = ComplexMatrix::identity(gens[0].rows());
    let reps = match *spec {
        StructureSpec::Cyclic { len, .. } => powers(&gens[0], len - 1)
            .into_iter()
            .skip(1)
            .map(|ak| Representative::Difference(&id - &ak))
            .collect(),
        StructureSpec::WeakGroup { len, .. }
        | StructureSpec::Geometric2 { len, .. }
        | StructureSpec::Geometric3 { len, .. } => {
            let pa = powers(&gens[0], len - 1);
            let pb = powers(&gens[1], len - 1);
            pa.iter()
                .zip(&pb)
                .skip(1)
                .map(|(x, y)| Representative::Difference(&id - &(x * y)))
                .collect()
        }
        StructureSpec::Product2 { p, q, .. } => {
            let pa = powers(&gens[0], p);
            let pb = powers(&gens[1], q);
            let mut reps = Vec::with_capacity(2 * p * q + p + q);
            // same k: |det(I − B^l)|
            for bl in pb.iter().skip(1) {
                reps.push(Representative::Difference(&id - bl));
            }
            // same l: |det(I − A^k)|
            for ak in pa.iter().skip(1) {
                reps.push(Representative::Difference(&id - ak));
            }
            for ak in pa.iter().skip(1) {
                for bl in pb.iter().skip(1) {
                    // exponents moving together
                    reps.push(Representative::Difference(&id - &(ak * bl)));
                    // exponents moving in opposite directions
                    reps.push(Representative::Difference(ak - bl));
                }
            }
            reps
        }
        StructureSpec::GeneralForm { ref a, m, len } => {
            // (Φ_i, Φ_j) is (Φ_0, Φ_{j−i}) rotated by A^i, and the part of
            // A^d[I; 0] orthogonal to [I; 0] is its lower block.
            let t = a.rows();
            powers(a, len - 1)
                .into_iter()
                .skip(1)
                .map(|p| Representative::Complement(p.block(m, 0, t - m, m)))
                .collect()
        }
        StructureSpec::Product3 { .. } => {
            return Err(StructureError::Unsupported(StructureKind::Product3))
        }
    };
    Ok(reps)
}

/// DP and DS from the reduced representative set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedDiversity {
    pub dp: f64,
    pub ds: f64,
    /// Number of representative distances evaluated.
    pub evaluations: usize,
}

pub fn reduced_diversity(spec: &StructureSpec) -> Result<ReducedDiversity> {
    if let &StructureSpec::Geometric2 { x, y, z, len } = spec {
        return Ok(geometric2_reduced(x, y, z, len));
    }
    let reps = representatives(spec)?;
    let (dp, ds) = reps.iter().fold((f64::INFINITY, f64::INFINITY), |(dp, ds), r| {
        (dp.min(r.dp()), ds.min(r.ds()))
    });
    Ok(ReducedDiversity {
        dp,
        ds,
        evaluations: reps.len(),
    })
}

/// Chernoff diversity function from the reduced representative set.
pub fn reduced_diversity_function(spec: &StructureSpec, n_rx: usize, snr: SnrPoint) -> Result<f64> {
    let reps = representatives(spec)?;
    Ok(reps
        .iter()
        .map(|r| chernoff_term(&r.gaps(), n_rx, snr.rho_tilde))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Closed-form reduced evaluation of the two-dimensional geometric family.
///
/// With `c = cos kz`, `X_k = A^k B^k` satisfies
/// `det(I − X_k) = 1 − c(e^{ikx} + e^{iky}) + e^{ik(x+y)}` and
/// `‖I − X_k‖_F² = 4 − 2c(cos kx + cos ky)`.
pub fn geometric2_reduced(x: f64, y: f64, z: f64, len: usize) -> ReducedDiversity {
    let mut dp = f64::INFINITY;
    let mut ds = f64::INFINITY;
    for k in 1..len {
        let kf = k as f64;
        let c = (kf * z).cos();
        let ex = C64::from_polar(1.0, kf * x);
        let ey = C64::from_polar(1.0, kf * y);
        let det = C64::new(1.0, 0.0) - (ex + ey) * c + ex * ey;
        let fro2 = 4.0 - 2.0 * c * (ex.re + ey.re);
        dp = dp.min((0.5 * det.norm().sqrt()).min(1.0));
        ds = ds.min((fro2.max(0.0).sqrt() / (2.0 * 2f64.sqrt())).min(1.0));
    }
    ReducedDiversity {
        dp,
        ds,
        evaluations: len.saturating_sub(1),
    }
}

/// Published constellations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogName {
    OrthogonalDesign121,
    Sl2F5_120,
    Numerical121,
    Geometric120,
    WeakGroup120BestDs,
    G21_4,
}

impl CatalogName {
    pub const ALL: [CatalogName; 6] = [
        Self::OrthogonalDesign121,
        Self::Sl2F5_120,
        Self::Numerical121,
        Self::Geometric120,
        Self::WeakGroup120BestDs,
        Self::G21_4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OrthogonalDesign121 => "orthogonal_design_121",
            Self::Sl2F5_120 => "sl2f5_120",
            Self::Numerical121 => "numerical_121",
            Self::Geometric120 => "geometric_120",
            Self::WeakGroup120BestDs => "weakgroup_120_best_ds",
            Self::G21_4 => "g21_4",
        }
    }
}

impl fmt::Display for CatalogName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CatalogName {
    type Err = StructureError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| StructureError::UnknownCatalog(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: CatalogName,
    /// Generating structure, when the entry has one.
    pub spec: Option<StructureSpec>,
    pub elements: SquareConstellation,
    pub published_dp: Option<f64>,
    pub published_ds: Option<f64>,
    /// Tolerance within which regenerated metrics must match the
    /// published (four-decimal) values.
    pub tolerance: f64,
}

pub fn catalog(name: &str) -> Result<CatalogEntry> {
    catalog_entry(name.parse()?)
}

fn polar(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

fn parse_c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `(√2/2)[[e^{2mπi/11}, e^{2nπi/11}], [−e^{−2nπi/11}, e^{−2mπi/11}]]`,
/// m major.
fn orthogonal_design() -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(121);
    for m in 0..11 {
        for n in 0..11 {
            let a = polar(2.0 * PI * m as f64 / 11.0);
            let b = polar(2.0 * PI * n as f64 / 11.0);
            out.push(ComplexMatrix::from_rows(&[vec![a * s, b * s], vec![-b.conj() * s, a.conj() * s]]));
        }
    }
    out
}

/// The 120-element representation of SL₂(F₅): `(PQ)^j X` for j = 0..9 and
/// X over twelve words in P and Q.
///
/// The off-diagonal entries of `Q` are `η² − 1` and `1 − η³`; with
/// `η² − η` and `η − η³` the matrix would not be unitary.
fn sl2f5() -> Vec<ComplexMatrix> {
    let eta = |k: i32| polar(2.0 * PI * k as f64 / 5.0);
    let s = 1.0 / 5f64.sqrt();
    let p = ComplexMatrix::from_rows(&[
        vec![(eta(2) - eta(3)) * s, (eta(1) - eta(4)) * s],
        vec![(eta(1) - eta(4)) * s, (eta(3) - eta(2)) * s],
    ]);
    let q = ComplexMatrix::from_rows(&[
        vec![(eta(1) - eta(2)) * s, (eta(2) - eta(0)) * s],
        vec![(eta(0) - eta(3)) * s, (eta(4) - eta(3)) * s],
    ]);
    let words = [
        "", "P", "Q", "QP", "QPQ", "QPQP", "QPQQ", "QPQPQ", "QPQPQQ", "QPQPQQP", "QPQPQQPQ",
        "QPQPQQPQP",
    ];
    let word = |w: &str| {
        w.chars().fold(ComplexMatrix::identity(2), |acc, ch| match ch {
            'P' => &acc * &p,
            _ => &acc * &q,
        })
    };
    let pq = &p * &q;
    let mut out = Vec::with_capacity(120);
    let mut lead = ComplexMatrix::identity(2);
    for _ in 0..10 {
        for w in words {
            out.push(&lead * &word(w));
        }
        lead = &lead * &pq;
    }
    out
}

/// The four-decimal generators of the numerically derived code.
fn numerical_generators() -> Result<(ComplexMatrix, ComplexMatrix)> {
    let a = ComplexMatrix::from_rows(&[
        vec![parse_c(-0.9049, 0.3265), parse_c(0.1635, 0.2188)],
        vec![parse_c(0.0364, 0.2707), parse_c(-0.8748, 0.4002)],
    ]);
    let b = ComplexMatrix::from_rows(&[
        vec![parse_c(-0.1596, 0.9767), parse_c(-0.1038, 0.0994)],
        vec![parse_c(0.0833, -0.1171), parse_c(-0.9432, 0.2995)],
    ]);
    Ok((nearest_unitary(&a)?, nearest_unitary(&b)?))
}

fn g21_4_generators() -> (ComplexMatrix, ComplexMatrix) {
    let eta = |k: i32| polar(2.0 * PI * k as f64 / 21.0);
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let a = ComplexMatrix::from_diag(&[eta(1), eta(4), eta(16)]);
    let b = ComplexMatrix::from_rows(&[
        vec![zero, one, zero],
        vec![zero, zero, one],
        vec![eta(7), zero, zero],
    ]);
    (a, b)
}

pub fn catalog_entry(name: CatalogName) -> Result<CatalogEntry> {
    let (spec, elements, dp, ds, tolerance) = match name {
        CatalogName::OrthogonalDesign121 => (None, orthogonal_design(), Some(0.1992), Some(0.1992), 5e-4),
        CatalogName::Sl2F5_120 => {
            let exact = 0.5 * ((3.0 - 5f64.sqrt()) / 2.0).sqrt();
            (None, sl2f5(), Some(exact), Some(exact), 1e-4)
        }
        CatalogName::Numerical121 => {
            let (a, b) = numerical_generators()?;
            let spec = StructureSpec::Product2 { a, b, p: 10, q: 10 };
            let el = expand_square(&spec)?;
            (Some(spec), el, Some(0.0278), Some(0.3886), 1e-3)
        }
        CatalogName::Geometric120 => {
            let spec = StructureSpec::Geometric2 {
                x: 17.0 * PI / 60.0,
                y: 13.0 * PI / 60.0,
                z: 22.0 * PI / 60.0,
                len: 120,
            };
            let el = expand_square(&spec)?;
            (Some(spec), el, Some(0.1464), Some(0.4156), 5e-4)
        }
        CatalogName::WeakGroup120BestDs => {
            let spec = StructureSpec::Geometric2 {
                x: PI / 10.0,
                y: PI / 6.0,
                z: 5.0 * PI / 4.0,
                len: 120,
            };
            let el = expand_square(&spec)?;
            (Some(spec), el, None, Some(0.4156), 5e-5)
        }
        CatalogName::G21_4 => {
            let (a, b) = g21_4_generators();
            let spec = StructureSpec::Product2 { a, b, p: 20, q: 2 };
            let el = expand_square(&spec)?;
            (Some(spec), el, Some(0.3851), None, 1e-4)
        }
    };
    Ok(CatalogEntry {
        name,
        spec,
        elements: SquareConstellation::new(elements)?,
        published_dp: dp,
        published_ds: ds,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qr_unitary;
    use crate::metrics::{diversity_function, diversity_product, diversity_sum};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unitary(rng: &mut impl Rng, m: usize) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(m, m, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        qr_unitary(&g).unwrap()
    }

    fn brute(spec: &StructureSpec) -> (f64, f64) {
        let frames = expand(spec).unwrap().frames().unwrap();
        (diversity_product(&frames).0, diversity_sum(&frames).0)
    }

    #[test]
    fn geometric2_trivial_expansions() {
        let spec = StructureSpec::Geometric2 {
            x: PI,
            y: PI,
            z: 0.0,
            len: 2,
        };
        let el = expand_square(&spec).unwrap();
        assert!(el[0].max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert!(el[1].max_abs_diff(&(-&ComplexMatrix::identity(2))) < 1e-15);

        let spec = StructureSpec::Geometric2 {
            x: 2.0 * PI / 3.0,
            y: 2.0 * PI / 3.0,
            z: 0.0,
            len: 3,
        };
        let el = expand_square(&spec).unwrap();
        let w = polar(2.0 * PI / 3.0);
        assert!(el[1].max_abs_diff(&ComplexMatrix::identity(2).scale(w)) < 1e-15);
        assert!(el[2].max_abs_diff(&ComplexMatrix::identity(2).scale(w * w)) < 1e-15);
        assert!((brute(&spec).0 - 3f64.sqrt() / 2.0).abs() < 1e-12);

        let spec = StructureSpec::Geometric2 {
            x: 2.0 * PI / 5.0,
            y: 8.0 * PI / 5.0,
            z: 4.0 * PI / 5.0,
            len: 5,
        };
        assert!((brute(&spec).0 - (5.0f64 / 8.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn weak_group_120_reduced_matches_brute_force() {
        let spec = StructureSpec::Geometric2 {
            x: PI / 30.0,
            y: 11.0 * PI / 30.0,
            z: PI / 4.0,
            len: 120,
        };
        let red = reduced_diversity(&spec).unwrap();
        assert_eq!(red.evaluations, 119);
        let generic = reduced_diversity(&spec.to_explicit()).unwrap();
        assert_eq!(generic.evaluations, 119);
        let (dp, ds) = brute(&spec);
        assert!((red.dp - dp).abs() < 1e-10);
        assert!((generic.dp - dp).abs() < 1e-10);
        assert!((red.ds - ds).abs() < 1e-10);
        assert!((dp - 0.3090).abs() < 1e-4);
    }

    #[test]
    fn product2_representative_count_and_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let spec = StructureSpec::Product2 {
            a: unitary(&mut rng, 2),
            b: unitary(&mut rng, 2),
            p: 2,
            q: 2,
        };
        assert_eq!(spec.size(), 9);
        let red = reduced_diversity(&spec).unwrap();
        assert_eq!(red.evaluations, 12);
        let (dp, ds) = brute(&spec);
        assert!((red.dp - dp).abs() < 1e-10);
        assert!((red.ds - ds).abs() < 1e-10);
    }

    #[test]
    fn cyclic_diagonal_reduced_ds() {
        let i = C64::new(0.0, 1.0);
        let spec = StructureSpec::Cyclic {
            a: ComplexMatrix::from_diag(&[i, i]),
            len: 4,
        };
        let red = reduced_diversity(&spec).unwrap();
        let (dp, ds) = brute(&spec);
        assert!((red.ds - ds).abs() < 1e-12);
        assert!((red.dp - dp).abs() < 1e-12);
        // i^k I: nearest pair differs by a quarter turn, |1 − i|/2 = √2/2.
        assert!((ds - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn general_form_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let spec = StructureSpec::GeneralForm {
            a: unitary(&mut rng, 4),
            m: 2,
            len: 6,
        };
        let red = reduced_diversity(&spec).unwrap();
        let (dp, ds) = brute(&spec);
        assert!((red.dp - dp).abs() < 1e-10);
        assert!((red.ds - ds).abs() < 1e-10);
        match expand(&spec).unwrap() {
            Expanded::Frames(c) => {
                assert_eq!((c.t(), c.m(), c.len()), (4, 2, 6));
            }
            Expanded::Square(_) => panic!("general form must produce frames"),
        }
    }

    #[test]
    fn reduced_diversity_function_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let spec = StructureSpec::WeakGroup {
            a: unitary(&mut rng, 3),
            b: unitary(&mut rng, 3),
            len: 7,
        };
        let snr = SnrPoint::from_db(6.0, spec.t(), spec.m()).unwrap();
        let frames = expand(&spec).unwrap().frames().unwrap();
        let full = diversity_function(&frames, 2, snr).unwrap();
        let red = reduced_diversity_function(&spec, 2, snr).unwrap();
        assert!((full - red).abs() < 1e-12 * full.max(1e-300));
    }

    #[test]
    fn product3_is_unsupported_for_reduction() {
        let i2 = ComplexMatrix::identity(2);
        let spec = StructureSpec::Product3 {
            a: i2.clone(),
            b: i2.clone(),
            c: i2,
            p: 1,
            q: 1,
            r: 1,
        };
        assert!(matches!(
            reduced_diversity(&spec),
            Err(StructureError::Unsupported(StructureKind::Product3))
        ));
        // expansion still works and flags the degenerate result
        let ex = expand(&spec).unwrap();
        assert_eq!(ex.len(), 8);
        assert!(ex.duplicate_pair().is_some());
    }

    #[test]
    fn resonant_angles_are_flagged() {
        let spec = StructureSpec::Geometric2 {
            x: PI,
            y: PI,
            z: 0.0,
            len: 3,
        };
        assert_eq!(expand(&spec).unwrap().duplicate_pair(), Some((0, 2)));
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = StructureSpec::Cyclic {
            a: ComplexMatrix::identity(2).scale_re(2.0),
            len: 3,
        };
        assert!(matches!(bad.validate(), Err(StructureError::NotUnitary { .. })));
        let small = StructureSpec::Cyclic {
            a: ComplexMatrix::identity(2),
            len: 1,
        };
        assert!(matches!(small.validate(), Err(StructureError::TooSmall)));
        assert!(matches!(catalog("nope"), Err(StructureError::UnknownCatalog(_))));
    }

    #[test]
    fn lift_of_identity_is_frame() {
        let sq = SquareConstellation::new(vec![ComplexMatrix::identity(2)]).unwrap();
        // a single element cannot form a constellation, but the lift shape is fixed
        assert!(lift(&sq).is_err());
        let sq = SquareConstellation::new(vec![ComplexMatrix::identity(2), -&ComplexMatrix::identity(2)]).unwrap();
        let c = lift(&sq).unwrap();
        assert_eq!((c.t(), c.m()), (4, 2));
        assert!(c.elements()[0].frame_defect() < 1e-15);
    }

    #[test]
    fn catalog_sizes() {
        let sizes = [121, 120, 121, 120, 120, 63];
        for (name, n) in CatalogName::ALL.into_iter().zip(sizes) {
            let e = catalog_entry(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(e.elements.len(), n, "{name}");
            assert_eq!(e.elements.duplicate_pair(), None, "{name}");
        }
    }

    #[test]
    fn catalog_sl2f5_distances() {
        let e = catalog_entry(CatalogName::Sl2F5_120).unwrap();
        let c = e.elements.lift().unwrap();
        let (dp, _) = diversity_product(&c);
        let (ds, _) = diversity_sum(&c);
        let exact = 0.5 * ((3.0 - 5f64.sqrt()) / 2.0).sqrt();
        assert!((dp - exact).abs() < 1e-10, "{dp}");
        assert!((ds - exact).abs() < 1e-10, "{ds}");
    }
}
