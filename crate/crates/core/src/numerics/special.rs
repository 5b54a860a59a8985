//! Exponential integral `E₁(x) = ∫ₓ^∞ e^{-t}/t dt` for real `x > 0`.
//!
//! Two evaluation paths, split at `x = SERIES_CUTOFF`:
//!
//! * `x ≤ 1`: the convergent power series
//!   `E₁(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k·k!)`.
//!   Terms shrink factorially, so ~20 terms reach full precision at `x = 1`.
//! * `x > 1`: the continued fraction
//!   `E₁(x) = e^{-x} · 1/(x+1- 1²/(x+3- 2²/(x+5- …)))`, evaluated with the
//!   modified Lentz algorithm. Convergence is fast for `x > 1` and the series
//!   would lose digits to cancellation there.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_CUTOFF: f64 = 1.0;
const MAX_ITER: usize = 500;
const TINY: f64 = 1e-300;

pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("E1 requires x > 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(if x <= SERIES_CUTOFF {
        e1_series(x)
    } else {
        e1_continued_fraction(x)
    })
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0; // (-x)^k / k!
    for k in 1..MAX_ITER {
        term *= -x / k as f64;
        let contrib = term / k as f64;
        sum += contrib;
        if contrib.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

fn e1_continued_fraction(x: f64) -> f64 {
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h * (-x).exp()
}
