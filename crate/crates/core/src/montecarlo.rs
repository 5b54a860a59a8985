//! Monte Carlo sweeps over SNR, crossing-point search and deviation metrics.
//!
//! Trial `t` always draws its channel from `RngStream::new(seed, t)` and the
//! same instance is evaluated at every grid point. Trials are grouped into
//! fixed-size chunks; chunk statistics are computed in trial order and merged
//! with a fixed pairwise tree, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::channel::{realize_channel, ChannelInstance, FadingModel, GainMatrix};
use crate::closedform::ClosedFormCurve;
use crate::detector::{
    logdet_per_user, metrics_with_logdet, mmse_approx_from_logdet, mmse_exact, InstanceMetrics,
};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

const CHUNK: usize = 64;
const METRICS: usize = 6;
const MAX_SKIP_FRACTION: f64 = 0.01;

/// Strictly increasing SNR points, linear scale.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrGrid {
    points: Vec<f64>,
}

impl SnrGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("SNR grid is empty".into()));
        }
        if points.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidParameter(
                "SNR points must be finite and non-negative".into(),
            ));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "SNR points must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    /// `n` points evenly spaced in dB from `start_db` to `stop_db` inclusive.
    pub fn from_db(start_db: f64, stop_db: f64, n: usize) -> Result<Self> {
        if n == 0 || !start_db.is_finite() || !stop_db.is_finite() {
            return Err(Error::InvalidParameter(
                "need at least one finite dB point".into(),
            ));
        }
        if n == 1 {
            return Self::new(vec![db_to_linear(start_db)]);
        }
        let step = (stop_db - start_db) / (n - 1) as f64;
        Self::new(
            (0..n)
                .map(|i| db_to_linear(start_db + step * i as f64))
                .collect(),
        )
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn db(&self) -> Vec<f64> {
        self.points.iter().map(|&g| linear_to_db(g)).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for SnrGrid {
    /// 25 points from -10 dB to 30 dB.
    fn default() -> Self {
        Self::from_db(-10.0, 30.0, 25).expect("default grid is valid")
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Mean and standard error of one metric along the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub grid: SnrGrid,
    /// Trials that entered the averages.
    pub n_trials: usize,
    pub skipped: usize,
    pub mmse_exact: MetricSeries,
    pub mmse_approx: MetricSeries,
    pub spectral_eff: MetricSeries,
    pub jensen_lb: MetricSeries,
    pub mutual_info: MetricSeries,
    pub mutual_info_lb: MetricSeries,
    pub closed_form: Vec<f64>,
    /// `10·log10(mean ε̂² / mean ε²)` per grid point.
    pub deviation_db: Vec<f64>,
    /// SNR offset (dB) at which the exact curve reaches the approximation's
    /// value; NaN when that value lies outside the exact curve's grid range.
    pub shift_db: Vec<f64>,
    /// (trial, point) pairs breaking an ordering that must always hold.
    pub bound_violations: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let delta = b.mean - a.mean;
        Moments {
            n,
            mean: a.mean + delta * b.n / n,
            m2: a.m2 + b.m2 + delta * delta * a.n * b.n / n,
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2.0 {
            f64::NAN
        } else {
            (self.m2 / (self.n - 1.0)).sqrt() / self.n.sqrt()
        }
    }
}

#[derive(Clone, Debug)]
struct ChunkStats {
    moments: Vec<[Moments; METRICS]>,
    skipped: usize,
    violations: usize,
}

impl ChunkStats {
    fn empty(points: usize) -> Self {
        Self {
            moments: vec![[Moments::default(); METRICS]; points],
            skipped: 0,
            violations: 0,
        }
    }

    fn merge(a: ChunkStats, b: ChunkStats) -> ChunkStats {
        ChunkStats {
            moments: a
                .moments
                .iter()
                .zip(&b.moments)
                .map(|(x, y)| std::array::from_fn(|m| Moments::merge(x[m], y[m])))
                .collect(),
            skipped: a.skipped + b.skipped,
            violations: a.violations + b.violations,
        }
    }
}

fn violates_bounds(m: &InstanceMetrics) -> bool {
    let slack = |a: f64| 1e-12 * a.abs().max(1.0);
    !(m.mmse_exact > 0.0 && m.mmse_exact <= 1.0 + 1e-15)
        || !(m.mmse_approx > 0.0 && m.mmse_approx <= 1.0)
        || m.mutual_info + slack(m.mutual_info) < m.mutual_info_lb
        || m.spectral_eff + slack(m.spectral_eff) < m.jensen_lb
}

fn run_chunk(
    b: &GainMatrix,
    model: &FadingModel,
    grid: &SnrGrid,
    seed: u64,
    trials: std::ops::Range<usize>,
) -> ChunkStats {
    let mut stats = ChunkStats::empty(grid.len());
    for t in trials {
        let inst = realize_channel(b, model, &mut RngStream::new(seed, t as u64));
        let Ok(logdet) = logdet_per_user(&inst) else {
            stats.skipped += 1;
            continue;
        };
        for (p, &gamma) in grid.points().iter().enumerate() {
            let m = metrics_with_logdet(&inst, logdet, gamma);
            if violates_bounds(&m) {
                stats.violations += 1;
            }
            let values = [
                m.mmse_exact,
                m.mmse_approx,
                m.spectral_eff,
                m.jensen_lb,
                m.mutual_info,
                m.mutual_info_lb,
            ];
            for (acc, v) in stats.moments[p].iter_mut().zip(values) {
                acc.push(v);
            }
        }
    }
    stats
}

fn merge_tree(mut chunks: Vec<ChunkStats>, points: usize) -> ChunkStats {
    if chunks.is_empty() {
        return ChunkStats::empty(points);
    }
    while chunks.len() > 1 {
        let mut next = Vec::with_capacity(chunks.len().div_ceil(2));
        let mut it = chunks.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => ChunkStats::merge(a, b),
                None => a,
            });
        }
        chunks = next;
    }
    chunks.pop().expect("non-empty")
}

/// Monte Carlo sweep on the default rayon pool.
pub fn run_sweep(
    b: &GainMatrix,
    model: &FadingModel,
    grid: &SnrGrid,
    n_trials: usize,
    seed: u64,
) -> Result<SweepResult> {
    run_sweep_with_threads(b, model, grid, n_trials, seed, None)
}

/// Monte Carlo sweep on a dedicated pool of `threads` workers (`None`: rayon default).
pub fn run_sweep_with_threads(
    b: &GainMatrix,
    model: &FadingModel,
    grid: &SnrGrid,
    n_trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<SweepResult> {
    if n_trials < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 trials, got {n_trials}"
        )));
    }
    model.validate()?;
    let closed = ClosedFormCurve::new(b, model)?;
    let n_chunks = n_trials.div_ceil(CHUNK);
    let compute = || {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                run_chunk(
                    b,
                    model,
                    grid,
                    seed,
                    c * CHUNK..((c + 1) * CHUNK).min(n_trials),
                )
            })
            .collect::<Vec<_>>()
    };
    let chunks = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?
            .install(compute),
        None => compute(),
    };
    let stats = merge_tree(chunks, grid.len());

    if stats.skipped as f64 > MAX_SKIP_FRACTION * n_trials as f64 {
        return Err(Error::ExcessiveSkips {
            skipped: stats.skipped,
            total: n_trials,
        });
    }
    let used = n_trials - stats.skipped;
    if used < 2 {
        return Err(Error::ExcessiveSkips {
            skipped: stats.skipped,
            total: n_trials,
        });
    }

    let series = |m: usize| MetricSeries {
        mean: stats.moments.iter().map(|p| p[m].mean).collect(),
        std_error: stats.moments.iter().map(|p| p[m].std_error()).collect(),
    };
    let mmse_exact = series(0);
    let mmse_approx = series(1);
    let deviation_db = mmse_approx
        .mean
        .iter()
        .zip(&mmse_exact.mean)
        .map(|(a, e)| 10.0 * (a / e).log10())
        .collect();
    let shift_db = horizontal_shift_db(&grid.db(), &mmse_exact.mean, &mmse_approx.mean);
    Ok(SweepResult {
        closed_form: grid.points().iter().map(|&g| closed.evaluate(g)).collect(),
        grid: grid.clone(),
        n_trials: used,
        skipped: stats.skipped,
        mmse_exact,
        mmse_approx,
        spectral_eff: series(2),
        jensen_lb: series(3),
        mutual_info: series(4),
        mutual_info_lb: series(5),
        deviation_db,
        shift_db,
        bound_violations: stats.violations,
    })
}

/// For each point, the dB offset `Δ` with `exact(γ_dB + Δ) = approx(γ_dB)`,
/// interpolating `ln(exact)` linearly in dB between grid points.
fn horizontal_shift_db(db: &[f64], exact: &[f64], approx: &[f64]) -> Vec<f64> {
    let ln_exact: Vec<f64> = exact.iter().map(|v| v.ln()).collect();
    approx
        .iter()
        .zip(db)
        .map(|(&target, &at_db)| {
            if !at_db.is_finite() {
                return f64::NAN;
            }
            let t = target.ln();
            for j in 0..db.len().saturating_sub(1) {
                let (y0, y1) = (ln_exact[j], ln_exact[j + 1]);
                let (lo, hi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
                if t >= lo && t <= hi && db[j].is_finite() {
                    let x = if y1 == y0 {
                        db[j]
                    } else {
                        db[j] + (t - y0) * (db[j + 1] - db[j]) / (y1 - y0)
                    };
                    return x - at_db;
                }
            }
            f64::NAN
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviationSummary {
    pub max_dev_db: f64,
    pub argmax_gamma_db: f64,
    /// Grid point where `|deviation_db|` is smallest.
    pub near_exact_gamma_db: f64,
    pub min_dev_db: f64,
    /// Largest finite `|shift_db|`, NaN when none is finite.
    pub max_shift_db: f64,
}

pub fn deviation_metric(result: &SweepResult) -> DeviationSummary {
    let db = result.grid.db();
    let abs: Vec<f64> = result.deviation_db.iter().map(|d| d.abs()).collect();
    let argmax = (0..abs.len())
        .max_by(|&i, &j| abs[i].total_cmp(&abs[j]))
        .unwrap_or(0);
    let argmin = (0..abs.len())
        .min_by(|&i, &j| abs[i].total_cmp(&abs[j]))
        .unwrap_or(0);
    let max_shift = result
        .shift_db
        .iter()
        .filter(|s| s.is_finite())
        .map(|s| s.abs())
        .fold(f64::NAN, f64::max);
    DeviationSummary {
        max_dev_db: abs[argmax],
        argmax_gamma_db: db[argmax],
        near_exact_gamma_db: db[argmin],
        min_dev_db: abs[argmin],
        max_shift_db: max_shift,
    }
}

/// Outcome of the crossing search for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossingReport {
    pub instance_id: usize,
    pub gamma_star: Option<f64>,
    /// Final bisection bracket around `gamma_star`.
    pub bracket: Option<(f64, f64)>,
    /// Bracket width relative to `gamma_star`.
    pub relative_width: f64,
    /// Signs of `ε̂² - ε²` along the scan with repeats collapsed, e.g. `+-`.
    pub sign_pattern: String,
}

const SCAN_PER_DECADE: usize = 10;
const SCAN_START: f64 = 1e-6;
const DEGENERATE_SPREAD: f64 = 1e-10;

/// Searches for `γ* ∈ (0, γ_max]` where `ε̂²(γ) = ε²(γ)`.
///
/// Scans a log grid starting at `1e-6 / λ̄` (`λ̄` the mean Gram eigenvalue)
/// for the first sign change of `ε̂² - ε²`, then bisects in `ln γ` until the
/// bracket width falls below `tol · γ*`.
pub fn find_crossing(
    instance: &ChannelInstance,
    instance_id: usize,
    gamma_max: f64,
    tol: f64,
) -> Result<CrossingReport> {
    if !(gamma_max > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(
            "γ_max and tol must be positive".into(),
        ));
    }
    let k = instance.dim() as f64;
    let logdet = logdet_per_user(instance)?;
    let mean_eig = instance.gram().trace().re / k;
    let geo_eig = logdet.exp();
    let spread = (mean_eig - geo_eig) / mean_eig;
    if spread < DEGENERATE_SPREAD {
        return Err(Error::DegenerateInstance { spread });
    }
    let diff = |g: f64| mmse_approx_from_logdet(logdet, g) - mmse_exact(instance, g);
    let sign = |d: f64| {
        if d > 0.0 {
            '+'
        } else if d < 0.0 {
            '-'
        } else {
            '0'
        }
    };

    let start = (SCAN_START / mean_eig).min(gamma_max);
    let ratio = 10f64.powf(1.0 / SCAN_PER_DECADE as f64);
    let mut pattern = String::new();
    let push = |c: char, pattern: &mut String| {
        if !pattern.ends_with(c) {
            pattern.push(c);
        }
    };

    let mut prev_g = start;
    let mut prev_d = diff(start);
    push(sign(prev_d), &mut pattern);
    let mut found: Option<(f64, f64)> = None;
    if prev_d == 0.0 {
        found = Some((start, start));
    }
    let mut g = start;
    while found.is_none() && g < gamma_max {
        g = (g * ratio).min(gamma_max);
        let d = diff(g);
        push(sign(d), &mut pattern);
        if d == 0.0 {
            found = Some((g, g));
        } else if d.signum() != prev_d.signum() {
            found = Some((prev_g, g));
        }
        prev_g = g;
        prev_d = d;
    }
    let Some((mut lo, mut hi)) = found else {
        return Ok(CrossingReport {
            instance_id,
            gamma_star: None,
            bracket: None,
            relative_width: f64::NAN,
            sign_pattern: pattern,
        });
    };
    if lo < hi {
        let lo_sign = diff(lo).signum();
        while (hi - lo) > tol * lo {
            let mid = (lo * hi).sqrt();
            let d = diff(mid);
            if d == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if d.signum() == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let star = (lo * hi).sqrt();
    // finish the scan so the pattern reflects the sign beyond the crossing
    let tail = diff(gamma_max.max(hi));
    push(sign(tail), &mut pattern);
    Ok(CrossingReport {
        instance_id,
        gamma_star: Some(star),
        bracket: Some((lo, hi)),
        relative_width: (hi - lo) / star,
        sign_pattern: pattern,
    })
}
