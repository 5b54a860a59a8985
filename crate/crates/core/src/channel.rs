//! Channel realizations `H = B · D^{1/2}` with full receive correlation.
//!
//! `B` is the deterministic multibeam gain matrix and `D^{1/2}` a diagonal of
//! per-user fading amplitudes. Every receive feed sees the same fading
//! coefficient from a given user, so the randomness lives entirely in the
//! diagonal.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{gram, logdet_hpd, smallest_singular_value, ComplexMatrix, RngStream};

/// Singular-value floor below which a gain matrix counts as rank deficient.
pub const RANK_FLOOR: f64 = 1e-10;

/// Relative trace change above which renormalization is reported.
const RENORM_WARN: f64 = 0.01;

/// `ln(10) / 10`: converts a dB quantity to natural-log units.
pub(crate) const LN10_OVER_10: f64 = std::f64::consts::LN_10 / 10.0;

/// Full-rank `K×K` gain matrix normalized to `tr(B^H B) = K`.
#[derive(Clone, Debug)]
pub struct GainMatrix {
    b: ComplexMatrix,
    gram: ComplexMatrix,
    logdet_per_user: f64,
    warning: Option<String>,
}

impl GainMatrix {
    /// Normalizes `b` and checks that it is square and full rank.
    pub fn new(b: ComplexMatrix) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::NotSquare {
                rows: b.rows(),
                cols: b.cols(),
            });
        }
        let k = b.rows() as f64;
        let power = b.frobenius_sq();
        if power == 0.0 {
            return Err(Error::RankDeficient {
                smallest_singular_value: 0.0,
            });
        }
        let ratio = power / k;
        // An already-normalized matrix is left bit-for-bit untouched.
        let (b, warning) = if (ratio - 1.0).abs() <= 1e-12 {
            (b, None)
        } else {
            let warning = ((ratio - 1.0).abs() > RENORM_WARN)
                .then(|| format!("gain matrix renormalized: tr(B^H B) was {power}, expected {k}"));
            (b.scale(ratio.sqrt().recip()), warning)
        };
        let smallest = smallest_singular_value(&b);
        if !(smallest > RANK_FLOOR) {
            return Err(Error::RankDeficient {
                smallest_singular_value: smallest,
            });
        }
        let gram = gram(&b);
        let logdet_per_user = logdet_hpd(&gram).map_err(|_| Error::RankDeficient {
            smallest_singular_value: smallest,
        })? / k;
        Ok(Self {
            b,
            gram,
            logdet_per_user,
            warning,
        })
    }

    pub fn identity(k: usize) -> Self {
        Self::new(ComplexMatrix::identity(k)).expect("identity is a valid gain matrix")
    }

    /// Banded symmetric pattern: `B_ij = overlap^|i-j|` before normalization.
    ///
    /// Co-channel gain decays geometrically with beam distance. With an `rng`
    /// each symmetric off-diagonal pair is scaled by an independent factor
    /// drawn uniformly from `[0.5, 1.5)`.
    pub fn synthetic(k: usize, overlap: f64, rng: Option<&mut RngStream>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "number of beams must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::InvalidParameter(format!(
                "overlap must lie in [0, 1), got {overlap}"
            )));
        }
        let mut b = ComplexMatrix::identity(k);
        let mut rng = rng;
        for i in 0..k {
            for j in (i + 1)..k {
                let jitter = rng.as_deref_mut().map_or(1.0, |r| 0.5 + r.uniform());
                let g = Complex64::new(jitter * overlap.powi((j - i) as i32), 0.0);
                b[(i, j)] = g;
                b[(j, i)] = g;
            }
        }
        Self::new(b)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::new(parse_pattern_csv(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Row-major CSV; real entries as plain numbers, complex ones as `a+bi`.
    pub fn to_csv(&self) -> String {
        let k = self.dim();
        let mut out = String::new();
        for i in 0..k {
            let row: Vec<String> = (0..k).map(|j| format_entry(self.b[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.b.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.b
    }

    /// `B^H B`.
    pub fn gram(&self) -> &ComplexMatrix {
        &self.gram
    }

    /// `(1/K) ln det(B^H B)`.
    pub fn logdet_per_user(&self) -> f64 {
        self.logdet_per_user
    }

    /// Set when normalization changed the power by more than 1%.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }
}

fn format_entry(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Parses a beam-pattern CSV. Blank lines and `#` comments are skipped.
pub fn parse_pattern_csv(text: &str) -> Result<ComplexMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                let field: String = field.chars().filter(|c| !c.is_whitespace()).collect();
                Complex64::from_str(&field).map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("cannot parse '{field}' as a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no matrix rows found".into(),
        });
    }
    let (r, c) = (rows.len(), rows[0].len());
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    ComplexMatrix::new(r, c, rows.concat()).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })
}

/// How the composite shadowing mean `shadow_mean` is interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MuUnits {
    /// `ln x ~ N(μ, σ²)`.
    #[default]
    Natural,
    /// `10·log10 x ~ N(μ, σ²)` with `μ, σ` in dB.
    Decibel,
}

/// Rician small-scale fading times lognormal shadowing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompositeParams {
    pub rician_factor_db: f64,
    pub shadow_mean: f64,
    pub shadow_sigma: f64,
    pub mu_units: MuUnits,
}

impl CompositeParams {
    pub fn rician_factor(&self) -> f64 {
        10f64.powf(self.rician_factor_db / 10.0)
    }

    /// Scale from the shadowing normal to `ln x`.
    pub(crate) fn log_scale(&self) -> f64 {
        match self.mu_units {
            MuUnits::Natural => 1.0,
            MuUnits::Decibel => LN10_OVER_10,
        }
    }
}

/// Rain attenuation whose dB value is lognormal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RainParams {
    pub lognormal_mu: f64,
    pub lognormal_sigma: f64,
    /// `true`: `l = 10^{-A_dB/10}` with `A_dB` lognormal.
    /// `false`: `ln l` is itself the lognormal draw.
    pub db_conversion: bool,
}

impl RainParams {
    /// Mean of the lognormal, `exp(μ + σ²/2)`.
    pub fn lognormal_mean(&self) -> f64 {
        (self.lognormal_mu + 0.5 * self.lognormal_sigma * self.lognormal_sigma).exp()
    }

    /// Scale from the lognormal draw to `ln l`.
    pub(crate) fn log_scale(&self) -> f64 {
        if self.db_conversion {
            -LN10_OVER_10
        } else {
            1.0
        }
    }
}

/// Distribution of the diagonal fading amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FadingModel {
    Composite(CompositeParams),
    Rain(RainParams),
    /// `D = I`.
    Unit,
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            FadingModel::Composite(p) => {
                if !p.rician_factor_db.is_finite() {
                    return Err(Error::InvalidParameter(
                        "Rician factor must be finite".into(),
                    ));
                }
                if !p.shadow_mean.is_finite() {
                    return Err(Error::InvalidParameter(
                        "shadowing mean must be finite".into(),
                    ));
                }
                if !(p.shadow_sigma > 0.0 && p.shadow_sigma.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "shadowing sigma must be positive, got {}",
                        p.shadow_sigma
                    )));
                }
            }
            FadingModel::Rain(p) => {
                if !(p.lognormal_mu.is_finite() || p.lognormal_mu == f64::NEG_INFINITY) {
                    return Err(Error::InvalidParameter("rain mu must be finite".into()));
                }
                if !(p.lognormal_sigma > 0.0 && p.lognormal_sigma.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "rain sigma must be positive, got {}",
                        p.lognormal_sigma
                    )));
                }
            }
            FadingModel::Unit => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            FadingModel::Composite(_) => "composite",
            FadingModel::Rain(_) => "rain",
            FadingModel::Unit => "unit",
        }
    }
}

/// Draws `k` fading amplitudes (the diagonal of `D^{1/2}`).
pub fn sample_fading(model: &FadingModel, k: usize, rng: &mut RngStream) -> Vec<Complex64> {
    match model {
        FadingModel::Unit => vec![Complex64::new(1.0, 0.0); k],
        FadingModel::Composite(p) => {
            let kr = p.rician_factor();
            let los = (kr / (kr + 1.0)).sqrt();
            let diffuse = (kr + 1.0).recip().sqrt();
            let scale = p.log_scale();
            (0..k)
                .map(|_| {
                    let h = Complex64::new(los, 0.0) + rng.complex_normal() * diffuse;
                    let ln_x = scale * (p.shadow_mean + p.shadow_sigma * rng.standard_normal());
                    h * (0.5 * ln_x).exp()
                })
                .collect()
        }
        FadingModel::Rain(p) => {
            let scale = p.log_scale();
            (0..k)
                .map(|_| {
                    let a = (p.lognormal_mu + p.lognormal_sigma * rng.standard_normal()).exp();
                    Complex64::new((0.5 * scale * a).exp(), 0.0)
                })
                .collect()
        }
    }
}

/// One channel realization with its Gram matrix cached.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelInstance {
    h: ComplexMatrix,
    gram: ComplexMatrix,
    fading: Vec<Complex64>,
}

impl ChannelInstance {
    pub fn new(b: &GainMatrix, fading: Vec<Complex64>) -> Self {
        assert_eq!(fading.len(), b.dim(), "one fading coefficient per user");
        let h = b.matrix().mul_diag_right(&fading);
        let gram = gram(&h);
        Self { h, gram, fading }
    }

    /// Wraps an arbitrary square channel matrix (fading taken as all ones).
    pub fn from_matrix(h: ComplexMatrix) -> Self {
        let fading = vec![Complex64::new(1.0, 0.0); h.cols()];
        let gram = gram(&h);
        Self { h, gram, fading }
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn gram(&self) -> &ComplexMatrix {
        &self.gram
    }

    pub fn fading(&self) -> &[Complex64] {
        &self.fading
    }
}

pub fn realize_channel(
    b: &GainMatrix,
    model: &FadingModel,
    rng: &mut RngStream,
) -> ChannelInstance {
    ChannelInstance::new(b, sample_fading(model, b.dim(), rng))
}
