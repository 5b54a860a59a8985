//! One-shot invariant battery behind `corrmmse verify`.

use std::fmt;

use crate::channel::{realize_channel, ChannelInstance};
use crate::cli::config::ExperimentConfig;
use crate::cli::run::{crossing_outcomes, CrossingOutcome, CROSSING_TOL};
use crate::closedform::{jensen_direction, ClosedFormCurve, JensenDirection};
use crate::detector::{
    immse_consistency_check, instance_metrics, logdet_per_user, mmse_approx_from_logdet,
};
use crate::numerics::RngStream;

const INSTANCES: usize = 100;
const DIRECTION_DRAWS: usize = 2000;
const IMMSE_SNRS: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check {
            name,
            passed,
            detail,
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<4}  {:<24}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

pub fn verify(cfg: &ExperimentConfig) -> VerifyReport {
    let mut report = VerifyReport::default();
    let b = match cfg.gain_matrix() {
        Ok(b) => {
            report.push(
                "gain_matrix",
                true,
                format!(
                    "K = {}, (1/K) ln det B^H B = {:.6}",
                    b.dim(),
                    b.logdet_per_user()
                ),
            );
            b
        }
        Err(e) => {
            report.push("gain_matrix", false, format!("{}: {e}", e.kind()));
            return report;
        }
    };
    let model = cfg.fading_model();
    if let Err(e) = model.validate() {
        report.push("fading_model", false, format!("{}: {e}", e.kind()));
        return report;
    }
    let grid = match cfg.grid() {
        Ok(g) => g,
        Err(e) => {
            report.push("snr_grid", false, format!("{}: {e}", e.kind()));
            return report;
        }
    };

    let instances: Vec<ChannelInstance> = (0..INSTANCES)
        .map(|t| realize_channel(&b, &model, &mut RngStream::new(cfg.seed, t as u64)))
        .collect();

    let (mut singular, mut range_bad, mut identity_worst, mut mi_bad, mut se_bad, mut pairs) =
        (0, 0, 0.0f64, 0, 0, 0);
    for inst in &instances {
        for &g in grid.points() {
            let Ok(m) = instance_metrics(inst, g) else {
                singular += 1;
                continue;
            };
            pairs += 1;
            if !(m.mmse_exact > 0.0
                && m.mmse_exact <= 1.0 + 1e-15
                && m.mmse_approx > 0.0
                && m.mmse_approx <= 1.0)
            {
                range_bad += 1;
            }
            let k = m.sinr_per_user.len() as f64;
            let from_sinr = m.sinr_per_user.iter().map(|s| 1.0 / (1.0 + s)).sum::<f64>() / k;
            identity_worst = identity_worst.max((from_sinr - m.mmse_exact).abs());
            if m.mutual_info + 1e-12 * m.mutual_info.max(1.0) < m.mutual_info_lb {
                mi_bad += 1;
            }
            if m.spectral_eff + 1e-12 * m.spectral_eff.max(1.0) < m.jensen_lb {
                se_bad += 1;
            }
        }
    }
    report.push(
        "mmse_range",
        range_bad == 0,
        format!("{range_bad} of {pairs} (instance, SNR) pairs outside (0, 1]"),
    );
    report.push(
        "sinr_mmse_identity",
        identity_worst <= 1e-12,
        format!("max |eps2 - mean 1/(1+sinr)| = {identity_worst:.3e} (limit 1e-12)"),
    );
    report.push(
        "minkowski_bound",
        mi_bad == 0,
        format!("{mi_bad} of {pairs} pairs with I_e < I_lb"),
    );
    report.push(
        "jensen_spectral_bound",
        se_bad == 0,
        format!("{se_bad} of {pairs} pairs with C < -log2 eps2"),
    );
    if singular > 0 {
        report.push(
            "singular_instances",
            true,
            format!("{singular} pairs skipped on singular Gram"),
        );
    }

    let k = b.dim() as f64;
    let immse_worst = instances
        .iter()
        .flat_map(|inst| {
            IMMSE_SNRS
                .iter()
                .map(move |&g| immse_consistency_check(inst, g, 1e-4 * g))
        })
        .fold(0.0, f64::max);
    report.push(
        "immse_relation",
        immse_worst < 1e-5 * k,
        format!("max residual {immse_worst:.3e} (limit {:.1e})", 1e-5 * k),
    );

    let outcomes = crossing_outcomes(cfg, &b, INSTANCES);
    let (mut found, mut eligible, mut widest) = (0, 0, 0.0f64);
    for o in &outcomes {
        if let CrossingOutcome::Report(r) = o {
            eligible += 1;
            if r.gamma_star.is_some() {
                found += 1;
                widest = widest.max(r.relative_width);
            }
        }
    }
    let crossings_ok = found as f64 >= 0.99 * eligible as f64 && widest <= CROSSING_TOL;
    report.push(
        "crossings",
        crossings_ok,
        format!(
            "sign change in {found} of {eligible} non-degenerate instances, widest bracket {widest:.2e} (gamma_max {:e})",
            cfg.crossing_gamma_max
        ),
    );

    report.push_direction(&b, &model, cfg.seed);
    report
}

impl VerifyReport {
    /// Compares the MC mean of the approximation with the closed form at
    /// extreme SNRs. A disagreement counts only when it exceeds 3 SE.
    fn push_direction(
        &mut self,
        b: &crate::channel::GainMatrix,
        model: &crate::channel::FadingModel,
        seed: u64,
    ) {
        let curve = match ClosedFormCurve::new(b, model) {
            Ok(c) => c,
            Err(e) => {
                self.push("closed_form_direction", false, format!("{}: {e}", e.kind()));
                return;
            }
        };
        let logdets: Vec<f64> = (0..DIRECTION_DRAWS)
            .filter_map(|t| {
                let inst = realize_channel(b, model, &mut RngStream::new(seed, t as u64));
                logdet_per_user(&inst).ok()
            })
            .collect();
        let mut details = Vec::new();
        let mut ok = true;
        for g in [1e-3, 1e3] {
            let vals: Vec<f64> = logdets
                .iter()
                .map(|&l| mmse_approx_from_logdet(l, g))
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let se = sd / n.sqrt();
            let diff = mean - curve.evaluate(g);
            let tag = jensen_direction(model, b, g).unwrap_or(JensenDirection::Mixed);
            let contradicted = match tag {
                JensenDirection::UpperBound => diff > 3.0 * se + 1e-15,
                JensenDirection::LowerBound => diff < -(3.0 * se + 1e-15),
                JensenDirection::Mixed => false,
            };
            ok &= !contradicted;
            details.push(format!(
                "gamma {g:e}: tag {}, MC - closed = {diff:+.3e} (SE {se:.1e})",
                tag.as_str()
            ));
        }
        self.push("closed_form_direction", ok, details.join("; "));
    }
}
