//! Numerical tolerances shared by every module.
//!
//! The defaults are compiled in. A process may install an override once at
//! startup (the CLI does this for `--tol`); library code always reads the
//! current record through [`tolerances`].

use std::sync::RwLock;

/// Central tolerance record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bound on `‖U*U − I‖_F` for a matrix to count as unitary (or a frame).
    pub unitarity: f64,
    /// Jacobi stopping threshold on the off-diagonal Frobenius norm,
    /// relative to the Frobenius norm of the input.
    pub jacobi_off: f64,
    /// Maximum number of cyclic Jacobi sweeps.
    pub jacobi_max_sweeps: usize,
    /// Two constellation elements closer than this (Frobenius) are equal.
    pub duplicate: f64,
    /// Absolute tolerance for the adaptive Gauss–Legendre quadrature.
    pub quadrature_abs: f64,
    /// Maximum dyadic refinement depth of the quadrature.
    pub quadrature_max_depth: u32,
    /// Largest accepted 1-norm condition number of `I + Y` in the Cayley map.
    pub cayley_max_cond: f64,
    /// Relative pivot threshold below which a matrix is treated as singular.
    pub singular_pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-8,
            jacobi_off: 1e-13,
            jacobi_max_sweeps: 100,
            duplicate: 1e-10,
            quadrature_abs: 1e-10,
            quadrature_max_depth: 12,
            cayley_max_cond: 1e12,
            singular_pivot: 1e-14,
        }
    }
}

static OVERRIDE: RwLock<Option<Tolerances>> = RwLock::new(None);

/// Current tolerance record (defaults unless overridden).
pub fn tolerances() -> Tolerances {
    OVERRIDE
        .read()
        .ok()
        .and_then(|g| *g)
        .unwrap_or_default()
}

/// Installs a process-wide override. Intended to be called once, before any
/// numerical work starts.
pub fn set_tolerances(tol: Tolerances) {
    if let Ok(mut g) = OVERRIDE.write() {
        *g = Some(tol);
    }
}

/// Applies a `key=value` override on top of `base`.
pub fn apply_override(base: &mut Tolerances, key: &str, value: &str) -> Result<(), String> {
    let parse_f = |v: &str| {
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite() && *x > 0.0)
            .ok_or_else(|| format!("invalid tolerance value `{v}` for `{key}`"))
    };
    match key {
        "unitarity" => base.unitarity = parse_f(value)?,
        "jacobi_off" => base.jacobi_off = parse_f(value)?,
        "duplicate" => base.duplicate = parse_f(value)?,
        "quadrature_abs" => base.quadrature_abs = parse_f(value)?,
        "cayley_max_cond" => base.cayley_max_cond = parse_f(value)?,
        "singular_pivot" => base.singular_pivot = parse_f(value)?,
        "jacobi_max_sweeps" => {
            base.jacobi_max_sweeps = value
                .parse()
                .map_err(|_| format!("invalid sweep count `{value}`"))?
        }
        "quadrature_max_depth" => {
            base.quadrature_max_depth = value
                .parse()
                .map_err(|_| format!("invalid depth `{value}`"))?
        }
        _ => return Err(format!("unknown tolerance `{key}`")),
    }
    Ok(())
}
