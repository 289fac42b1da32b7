//! Monte-Carlo simulation of differential unitary modulation over a
//! quasi-static Rayleigh flat-fading channel.
//!
//! Per frame a channel `H` (M×N, CN(0,1) entries) is drawn and held. The
//! transmitter starts from `S₀ = I` and sends `S_τ = Ψ_{z_τ} S_{τ−1}`; the
//! receiver sees `Y_τ = √ρ·S_τ·H + W_τ` and decides
//! `ẑ = argmin_z ‖Y_τ − Ψ_z Y_{τ−1}‖_F`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fastdec::{build_tables, exhaustive_decode, fast_decode, DecoderTables, FastDecError};
use crate::linalg::{nearest_unitary, ComplexMatrix, LinalgError};
use crate::metrics::{db_to_linear, SquareConstellation};
use crate::param::complex_gaussian;
use crate::stats::wilson95;
use crate::structures::StructureSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid channel configuration: {0}")]
    Config(String),
    #[error("decoder does not match the constellation: {0}")]
    DecoderMismatch(String),
    #[error(transparent)]
    FastDec(#[from] FastDecError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// Blocks between re-orthogonalizations of the transmitted state.
pub const REORTHO_INTERVAL: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub m_tx: usize,
    pub n_rx: usize,
    pub snr_db: f64,
    /// Data blocks per channel realization.
    pub frame_blocks: usize,
    /// Number of frames.
    pub trials: usize,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_tx == 0 || self.n_rx == 0 || self.frame_blocks == 0 || self.trials == 0 {
            return Err(ChannelError::Config("all counts must be at least 1".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(ChannelError::Config("SNR must be finite".into()));
        }
        Ok(())
    }

    pub fn blocks_total(&self) -> u64 {
        self.frame_blocks as u64 * self.trials as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    MlExhaustive,
    Fast,
}

impl DecoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MlExhaustive => "ml_exhaustive",
            Self::Fast => "fast",
        }
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ml" | "ml_exhaustive" | "exhaustive" => Ok(Self::MlExhaustive),
            "fast" => Ok(Self::Fast),
            _ => Err(format!("unknown decoder `{s}` (expected ml_exhaustive or fast)")),
        }
    }
}

/// Differential demodulator: maps two consecutive received blocks to an
/// element index.
pub trait Demodulator: Sync {
    fn kind(&self) -> DecoderKind;
    fn decode(&self, y_prev: &ComplexMatrix, y_curr: &ComplexMatrix) -> usize;
}

/// Direct evaluation of every residual.
pub struct ExhaustiveDemodulator<'a> {
    elements: &'a [ComplexMatrix],
}

impl<'a> ExhaustiveDemodulator<'a> {
    pub fn new(sq: &'a SquareConstellation) -> Self {
        Self {
            elements: sq.elements(),
        }
    }
}

impl Demodulator for ExhaustiveDemodulator<'_> {
    fn kind(&self) -> DecoderKind {
        DecoderKind::MlExhaustive
    }

    fn decode(&self, y_prev: &ComplexMatrix, y_curr: &ComplexMatrix) -> usize {
        exhaustive_decode(self.elements, y_prev, y_curr).0
    }
}

/// Trigonometric-correlation decoder built from a structure spec.
pub struct FastDemodulator {
    tables: DecoderTables,
}

impl FastDemodulator {
    pub fn new(spec: &StructureSpec) -> Result<Self> {
        Ok(Self {
            tables: build_tables(spec)?,
        })
    }

    /// Builds the decoder and checks that its elements reproduce `sq`.
    pub fn for_constellation(spec: &StructureSpec, sq: &SquareConstellation) -> Result<Self> {
        let d = Self::new(spec)?;
        if d.tables.len() != sq.len() {
            return Err(ChannelError::DecoderMismatch(format!(
                "spec has {} elements, constellation {}",
                d.tables.len(),
                sq.len()
            )));
        }
        for (i, e) in sq.elements().iter().enumerate() {
            let diff = d.tables.element(i).max_abs_diff(e);
            if diff > 1e-8 {
                return Err(ChannelError::DecoderMismatch(format!("element {i} differs by {diff:.3e}")));
            }
        }
        Ok(d)
    }

    pub fn tables(&self) -> &DecoderTables {
        &self.tables
    }
}

impl Demodulator for FastDemodulator {
    fn kind(&self) -> DecoderKind {
        DecoderKind::Fast
    }

    fn decode(&self, y_prev: &ComplexMatrix, y_curr: &ComplexMatrix) -> usize {
        fast_decode(&self.tables, y_prev, y_curr)
            .expect("block shapes fixed by the simulator")
            .index
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub block_errors: u64,
    pub blocks_total: u64,
    pub bler: f64,
    /// Wilson 95% interval for the block error rate.
    pub lo: f64,
    pub hi: f64,
    /// Largest `‖S*S − I‖_F` of the transmitted state seen in any frame.
    pub max_state_defect: f64,
    pub decoder: DecoderKind,
    pub config: ChannelConfig,
}

/// Random source of frame `frame`: the seeded ChaCha generator on its own
/// stream, so frames can run in any order.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

struct FrameOutcome {
    errors: u64,
    max_defect: f64,
}

fn run_frame<D: Demodulator + ?Sized>(
    elements: &[ComplexMatrix],
    cfg: &ChannelConfig,
    amp: f64,
    demod: &D,
    frame: u64,
) -> FrameOutcome {
    let mut rng = frame_rng(cfg.seed, frame);
    let (m, n) = (cfg.m_tx, cfg.n_rx);
    let h = complex_gaussian(m, n, &mut rng);
    let receive = |s: &ComplexMatrix, rng: &mut ChaCha8Rng| &(s * &h).scale_re(amp) + &complex_gaussian(m, n, rng);

    let mut s = ComplexMatrix::identity(m);
    let mut y_prev = receive(&s, &mut rng);
    let mut errors = 0;
    let mut max_defect: f64 = 0.0;
    for tau in 1..=cfg.frame_blocks {
        let z = rng.random_range(0..elements.len());
        s = &elements[z] * &s;
        if tau % REORTHO_INTERVAL == 0 {
            max_defect = max_defect.max(s.frame_defect());
            if let Ok(p) = nearest_unitary(&s) {
                s = p;
            }
        }
        let y = receive(&s, &mut rng);
        if demod.decode(&y_prev, &y) != z {
            errors += 1;
        }
        y_prev = y;
    }
    FrameOutcome {
        errors,
        max_defect: max_defect.max(s.frame_defect()),
    }
}

/// Block error rate of differential transmission with `demod`.
pub fn simulate_differential<D: Demodulator + ?Sized>(
    sq: &SquareConstellation,
    cfg: &ChannelConfig,
    demod: &D,
) -> Result<SimResult> {
    cfg.validate()?;
    if sq.m() != cfg.m_tx {
        return Err(ChannelError::Config(format!(
            "constellation has M={}, configuration M={}",
            sq.m(),
            cfg.m_tx
        )));
    }
    let amp = db_to_linear(cfg.snr_db).sqrt();
    let (errors, max_defect) = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|f| {
            let o = run_frame(sq.elements(), cfg, amp, demod, f);
            (o.errors, o.max_defect)
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    let total = cfg.blocks_total();
    let (lo, hi) = wilson95(errors, total);
    Ok(SimResult {
        block_errors: errors,
        blocks_total: total,
        bler: errors as f64 / total as f64,
        lo,
        hi,
        max_state_defect: max_defect,
        decoder: demod.kind(),
        config: *cfg,
    })
}

/// Empirical pairwise error of the one-shot noncoherent ML rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseEstimate {
    pub errors: u64,
    pub trials: u64,
    pub ratio: f64,
    pub lo: f64,
    pub hi: f64,
}

const PAIR_CHUNK: u64 = 4096;

/// Sends one of two frames (chosen by a fair coin) through
/// `R = √(ρT/M)·Φ·H + W` and decides by the larger `‖R*Φ‖_F`. Exact ties
/// are broken by a fair coin, so identical candidates give ½.
pub fn pairwise_error_empirical(
    phi_a: &ComplexMatrix,
    phi_b: &ComplexMatrix,
    n_rx: usize,
    rho: f64,
    trials: u64,
    seed: u64,
) -> Result<PairwiseEstimate> {
    if phi_a.shape() != phi_b.shape() {
        return Err(ChannelError::Config("frames must have equal shape".into()));
    }
    if n_rx == 0 || trials == 0 || !(rho > 0.0 && rho.is_finite()) {
        return Err(ChannelError::Config("need n_rx >= 1, trials >= 1 and a positive SNR".into()));
    }
    let (t, m) = phi_a.shape();
    let amp = (rho * t as f64 / m as f64).sqrt();
    let chunks = trials.div_ceil(PAIR_CHUNK);
    let errors: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = frame_rng(seed, c);
            let count = PAIR_CHUNK.min(trials - c * PAIR_CHUNK);
            let mut errs = 0;
            for _ in 0..count {
                let send_a = rng.random::<bool>();
                let (tx, other) = if send_a { (phi_a, phi_b) } else { (phi_b, phi_a) };
                let h = complex_gaussian(m, n_rx, &mut rng);
                let w = complex_gaussian(t, n_rx, &mut rng);
                let r = &(tx * &h).scale_re(amp) + &w;
                let right = (&r.adjoint() * tx).frobenius_norm_sqr();
                let wrong = (&r.adjoint() * other).frobenius_norm_sqr();
                if wrong > right || (wrong == right && rng.random::<bool>()) {
                    errs += 1;
                }
            }
            errs
        })
        .sum();
    let (lo, hi) = wilson95(errors, trials);
    Ok(PairwiseEstimate {
        errors,
        trials,
        ratio: errors as f64 / trials as f64,
        lo,
        hi,
    })
}
