//! Closed-form expected MMSE approximations.
//!
//! All of them share one shape: `E{ε̂²} ≈ 1/(1 + γ·exp(m))` with
//! `m = (1/K) E{ln det(H^H H)}`. Because `H^H H = D^{1/2 H} B^H B D^{1/2}`,
//! the log-determinant splits into a deterministic gain part and a sum of
//! per-user fading log-moments:
//!
//! `m = (1/K) ln det(B^H B) + E{ln |d|²}`.
//!
//! Fading log-moments:
//!
//! * composite: `E{ln x} + E{ln |h|²} = μ + g₂(K_r) - ln(K_r + 1)`, where
//!   `g₂(s²) = ln s² + E₁(s²)` is the log-moment of a unit-variance
//!   non-central chi-square with non-centrality `s²`.
//! * rain: `E{ln l} = exp(μ + σ²/2)` (times `-ln10/10` under dB conversion).
//!
//! All logarithms are natural.

use crate::channel::{CompositeParams, FadingModel, GainMatrix, RainParams};
use crate::error::{Error, Result};
use crate::numerics::{exp_integral_e1, RngStream};

/// `ln s² + E₁(s²)`.
pub fn g2(s_sq: f64) -> Result<f64> {
    if !(s_sq > 0.0) {
        return Err(Error::Domain(format!("g2 requires s² > 0, got {s_sq}")));
    }
    Ok(s_sq.ln() + exp_integral_e1(s_sq)?)
}

/// `E{ln |h|²}` for unit-power Rician `h` with linear factor `kr`.
pub fn rician_log_moment(kr: f64) -> Result<f64> {
    Ok(g2(kr)? - kr.ln_1p())
}

/// Per-user `E{ln |d|²}` for the selected fading model.
pub fn fading_log_moment(model: &FadingModel) -> Result<f64> {
    model.validate()?;
    Ok(match model {
        FadingModel::Unit => 0.0,
        FadingModel::Composite(p) => {
            p.log_scale() * p.shadow_mean + rician_log_moment(p.rician_factor())?
        }
        FadingModel::Rain(p) => {
            if p.lognormal_mu == f64::NEG_INFINITY {
                0.0
            } else {
                p.log_scale() * p.lognormal_mean()
            }
        }
    })
}

/// `(1/K) E{ln det(H^H H)}`.
pub fn expected_logdet(b: &GainMatrix, model: &FadingModel) -> Result<f64> {
    Ok(b.logdet_per_user() + fading_log_moment(model)?)
}

#[inline]
fn curve(mean_log: f64, gamma: f64) -> f64 {
    assert!(gamma >= 0.0, "SNR must be non-negative");
    if gamma == 0.0 {
        1.0
    } else {
        1.0 / (1.0 + gamma * mean_log.exp())
    }
}

pub fn expected_mmse_composite(
    b: &GainMatrix,
    params: &CompositeParams,
    gamma: f64,
) -> Result<f64> {
    Ok(curve(
        expected_logdet(b, &FadingModel::Composite(*params))?,
        gamma,
    ))
}

pub fn expected_mmse_rain(b: &GainMatrix, params: &RainParams, gamma: f64) -> Result<f64> {
    Ok(curve(
        expected_logdet(b, &FadingModel::Rain(*params))?,
        gamma,
    ))
}

/// `γ ↦ 1/(1 + γ·exp(gain_logdet + expected_log_moment))` for one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormCurve {
    pub model: FadingModel,
    pub gain_logdet: f64,
    pub expected_log_moment: f64,
}

impl ClosedFormCurve {
    pub fn new(b: &GainMatrix, model: &FadingModel) -> Result<Self> {
        Ok(Self {
            model: *model,
            gain_logdet: b.logdet_per_user(),
            expected_log_moment: fading_log_moment(model)?,
        })
    }

    pub fn evaluate(&self, gamma: f64) -> f64 {
        curve(self.gain_logdet + self.expected_log_moment, gamma)
    }
}

/// Which side of `E{ε̂²}` the closed form falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JensenDirection {
    /// `x < 0` almost surely: `φ` is concave there, so `E{ε̂²} ≤ closed form`.
    UpperBound,
    /// `x > 0` almost surely: `φ` is convex there, so `E{ε̂²} ≥ closed form`.
    LowerBound,
    /// The distribution of `x` straddles 0.
    Mixed,
}

impl JensenDirection {
    pub fn as_str(&self) -> &'static str {
        match self {
            JensenDirection::UpperBound => "upper",
            JensenDirection::LowerBound => "lower",
            JensenDirection::Mixed => "mixed",
        }
    }
}

const DIRECTION_DRAWS: usize = 4096;
const DIRECTION_SEED: u64 = 0x6a65_6e73_656e;
const DIRECTION_TAIL: f64 = 0.005;

/// Classifies the argument `x = (1/K) ln det(H^H H) + ln γ` of
/// `φ(x) = 1/(1 + e^x)`, so that `ε̂² = φ(x)`.
///
/// `φ'' = e^x (e^x - 1)/(1 + e^x)³`: concave for `x < 0`, convex for `x > 0`.
/// The spread of `x` is judged from the 0.5% and 99.5% quantiles of a fixed
/// internal sample of fading draws, so the result is deterministic.
pub fn jensen_direction(
    model: &FadingModel,
    b: &GainMatrix,
    gamma: f64,
) -> Result<JensenDirection> {
    model.validate()?;
    let ln_gamma = gamma.ln();
    let k = b.dim();
    let (lo, hi) = if matches!(model, FadingModel::Unit) {
        (b.logdet_per_user(), b.logdet_per_user())
    } else {
        let mut draws: Vec<f64> = (0..DIRECTION_DRAWS)
            .map(|i| {
                let mut rng = RngStream::new(DIRECTION_SEED, i as u64);
                let fading = crate::channel::sample_fading(model, k, &mut rng);
                b.logdet_per_user()
                    + fading.iter().map(|d| d.norm_sqr().ln()).sum::<f64>() / k as f64
            })
            .collect();
        draws.sort_by(f64::total_cmp);
        let tail = (DIRECTION_TAIL * DIRECTION_DRAWS as f64) as usize;
        (draws[tail], draws[DIRECTION_DRAWS - 1 - tail])
    };
    Ok(if hi + ln_gamma < 0.0 {
        JensenDirection::UpperBound
    } else if lo + ln_gamma > 0.0 {
        JensenDirection::LowerBound
    } else {
        JensenDirection::Mixed
    })
}
