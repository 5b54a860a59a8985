//! Acceptance criteria, one PASS/FAIL line each. Exits 1 if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use corrmmse::channel::{
    realize_channel, ChannelInstance, CompositeParams, FadingModel, GainMatrix, MuUnits, RainParams,
};
use corrmmse::closedform::g2;
use corrmmse::detector::{
    immse_consistency_check, instance_metrics, mmse_approx, mmse_exact, sinr_mmse,
};
use corrmmse::montecarlo::{deviation_metric, find_crossing, run_sweep, SnrGrid, SweepResult};
use corrmmse::numerics::{ComplexMatrix, RngStream};
use corrmmse::Error;
use num_complex::Complex64;

const SEED: u64 = 2013;

struct Outcome {
    passed: bool,
    detail: String,
}

fn composite() -> CompositeParams {
    CompositeParams {
        rician_factor_db: 10.0,
        shadow_mean: -2.63,
        shadow_sigma: 0.5,
        mu_units: MuUnits::Natural,
    }
}

fn rain() -> RainParams {
    RainParams {
        lognormal_mu: -2.63,
        lognormal_sigma: 0.5,
        db_conversion: false,
    }
}

fn synthetic() -> GainMatrix {
    GainMatrix::synthetic(7, 0.3, None).unwrap()
}

fn composite_instances(n: usize, seed: u64) -> Vec<ChannelInstance> {
    let b = synthetic();
    let model = FadingModel::Composite(composite());
    (0..n)
        .map(|t| realize_channel(&b, &model, &mut RngStream::new(seed, t as u64)))
        .collect()
}

fn oracle_inverse(a: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    let n = a.rows();
    let mut m: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).collect())
        .collect();
    let mut inv: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Complex64::new((i == j) as u8 as f64, 0.0))
                .collect()
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].norm().total_cmp(&m[j][c].norm()))
            .unwrap();
        m.swap(c, p);
        inv.swap(c, p);
        let d = m[c][c];
        for j in 0..n {
            m[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in (0..n).filter(|&r| r != c) {
            let f = m[r][c];
            for j in 0..n {
                let (mc, ic) = (m[c][j], inv[c][j]);
                m[r][j] -= f * mc;
                inv[r][j] -= f * ic;
            }
        }
    }
    inv
}

fn identity_exactness() -> Outcome {
    let grid = SnrGrid::default();
    let mut worst = 0.0f64;
    for k in [1usize, 4, 7] {
        let inst = ChannelInstance::from_matrix(ComplexMatrix::identity(k));
        for &g in grid.points() {
            let awgn = 1.0 / (1.0 + g);
            worst = worst.max((mmse_exact(&inst, g) - awgn).abs());
            worst = worst.max((mmse_approx(&inst, g).unwrap() - awgn).abs());
        }
    }
    Outcome {
        passed: worst <= 1e-12,
        detail: format!("max error {worst:.2e} (limit 1e-12)"),
    }
}

fn oracle_equivalence() -> Outcome {
    let (mut sinr_err, mut mmse_err, mut ident_err) = (0.0f64, 0.0f64, 0.0f64);
    for inst in composite_instances(200, SEED) {
        let k = inst.dim();
        for &g in SnrGrid::default().points() {
            let mut reg = inst.gram().scale(g);
            for i in 0..k {
                reg[(i, i)] += 1.0;
            }
            let r = oracle_inverse(&reg);
            let sinr = sinr_mmse(&inst, g);
            for i in 0..k {
                let want = 1.0 / r[i][i].re - 1.0;
                sinr_err = sinr_err.max((sinr[i] - want).abs() / want.abs().max(1.0));
            }
            let want = (0..k).map(|i| r[i][i].re).sum::<f64>() / k as f64;
            let e = mmse_exact(&inst, g);
            mmse_err = mmse_err.max((e - want).abs());
            let via_sinr = sinr.iter().map(|s| 1.0 / (1.0 + s)).sum::<f64>() / k as f64;
            ident_err = ident_err.max((via_sinr - e).abs());
        }
    }
    Outcome {
        passed: sinr_err <= 1e-9 && mmse_err <= 1e-9 && ident_err <= 1e-12,
        detail: format!("SINR {sinr_err:.2e}, MMSE {mmse_err:.2e} (limit 1e-9); SINR identity {ident_err:.2e} (limit 1e-12)"),
    }
}

fn immse_relation() -> Outcome {
    let mut worst = 0.0f64;
    let mut k = 0.0;
    for inst in composite_instances(50, SEED) {
        k = inst.dim() as f64;
        for g in [0.1, 1.0, 10.0] {
            worst = worst.max(immse_consistency_check(&inst, g, 1e-4 * g));
        }
    }
    Outcome {
        passed: worst < 1e-5 * k,
        detail: format!("max residual {worst:.2e} (limit {:.1e})", 1e-5 * k),
    }
}

fn bound_directions() -> Outcome {
    let grid = SnrGrid::default();
    let (mut pairs, mut mi_bad, mut se_bad) = (0usize, 0usize, 0usize);
    for inst in composite_instances(400, SEED) {
        for &g in grid.points() {
            let m = instance_metrics(&inst, g).unwrap();
            pairs += 1;
            mi_bad += (m.mutual_info < m.mutual_info_lb) as usize;
            se_bad += (m.spectral_eff < m.jensen_lb) as usize;
        }
    }
    Outcome {
        passed: pairs >= 10_000 && mi_bad == 0 && se_bad == 0,
        detail: format!("{pairs} pairs: I_e < I_lb in {mi_bad}, C < Jensen in {se_bad}"),
    }
}

fn crossings() -> Outcome {
    let (mut eligible, mut found, mut widest) = (0usize, 0usize, 0.0f64);
    for (id, inst) in composite_instances(100, SEED).iter().enumerate() {
        match find_crossing(inst, id, 1e6, 1e-6) {
            Ok(r) => {
                eligible += 1;
                if r.gamma_star.is_some() {
                    found += 1;
                    widest = widest.max(r.relative_width);
                }
            }
            Err(Error::DegenerateInstance { .. }) => {}
            Err(e) => {
                return Outcome {
                    passed: false,
                    detail: format!("instance {id}: {e}"),
                }
            }
        }
    }
    Outcome {
        passed: eligible > 0 && found as f64 >= 0.99 * eligible as f64 && widest < 1e-6,
        detail: format!("{found} of {eligible} non-degenerate instances cross; widest bracket {widest:.2e} relative"),
    }
}

fn within_three_se(r: &SweepResult) -> (bool, String) {
    let z: Vec<f64> = (0..r.grid.len())
        .map(|i| (r.mmse_approx.mean[i] - r.closed_form[i]) / r.mmse_approx.std_error[i])
        .collect();
    let outside = z.iter().filter(|z| !(z.abs() < 3.0)).count();
    let (i, worst) =
        z.iter().enumerate().fold(
            (0, 0.0f64),
            |a, (i, &v)| if v.abs() > a.1.abs() { (i, v) } else { a },
        );
    (
        outside == 0,
        format!(
            "{outside} of {} points beyond 3 SE; worst z = {worst:+.2} at {} dB",
            z.len(),
            r.grid.db()[i]
        ),
    )
}

fn closed_form_rain() -> Outcome {
    let r = run_sweep(
        &synthetic(),
        &FadingModel::Rain(rain()),
        &SnrGrid::default(),
        100_000,
        SEED,
    )
    .unwrap();
    let (passed, detail) = within_three_se(&r);
    Outcome { passed, detail }
}

fn closed_form_composite() -> Outcome {
    let r = run_sweep(
        &synthetic(),
        &FadingModel::Composite(composite()),
        &SnrGrid::default(),
        100_000,
        SEED,
    )
    .unwrap();
    let (agree, detail) = within_three_se(&r);

    let kr = composite().rician_factor();
    let mut rng = RngStream::new(SEED, u64::MAX);
    let (los, diffuse) = ((kr / (kr + 1.0)).sqrt(), (1.0 / (kr + 1.0)).sqrt());
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| (los + diffuse * rng.complex_normal()).norm_sqr().ln())
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let se = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0) / n as f64)
        .sqrt();
    let gap = (g2(kr).unwrap() - kr.ln_1p() - mean).abs();
    let convention = gap < 3.0 * se;
    Outcome {
        passed: agree && convention,
        detail: format!("{detail}; g2 convention gap {:.2} SE", gap / se),
    }
}

fn deviation_surrogate() -> Outcome {
    let b = synthetic();
    let grid = SnrGrid::default();
    let c = deviation_metric(
        &run_sweep(&b, &FadingModel::Composite(composite()), &grid, 1000, SEED).unwrap(),
    );
    let r =
        deviation_metric(&run_sweep(&b, &FadingModel::Rain(rain()), &grid, 1000, SEED).unwrap());
    Outcome {
        passed: c.max_dev_db <= 2.0 && r.max_dev_db <= 1.5 && c.min_dev_db < 0.1 && r.min_dev_db < 0.1,
        detail: format!(
            "composite max {:.3} dB at {} dB, min {:.3} dB at {} dB; rain max {:.3} dB at {} dB, min {:.3} dB at {} dB",
            c.max_dev_db, c.argmax_gamma_db, c.min_dev_db, c.near_exact_gamma_db, r.max_dev_db, r.argmax_gamma_db,
            r.min_dev_db, r.near_exact_gamma_db
        ),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for threads in ["1", "8"] {
        let out = Command::new(env!("CARGO_BIN_EXE_corrmmse"))
            .args(["run", "--trials", "2000", "--out", threads])
            .current_dir(dir.path())
            .env("CORRMMSE_THREADS", threads)
            .output()
            .unwrap();
        if !out.status.success() {
            return Outcome {
                passed: false,
                detail: format!(
                    "{threads} threads: {}",
                    String::from_utf8_lossy(&out.stderr)
                ),
            };
        }
        csvs.push(std::fs::read(dir.path().join(format!("{threads}_sweep.csv"))).unwrap());
    }
    Outcome {
        passed: csvs[0] == csvs[1],
        detail: format!(
            "sweep CSV {} bytes, 1 vs 8 threads identical: {}",
            csvs[0].len(),
            csvs[0] == csvs[1]
        ),
    }
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 9] = [
        ("identity-channel exactness", 1, identity_exactness),
        ("oracle equivalence", 10, oracle_equivalence),
        ("I-MMSE relation", 5, immse_relation),
        ("bound directions", 30, bound_directions),
        ("crossings", 30, crossings),
        ("closed-form agreement, rain", 120, closed_form_rain),
        (
            "closed-form agreement, composite",
            120,
            closed_form_composite,
        ),
        ("deviation surrogate", 120, deviation_surrogate),
        ("determinism", 60, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let passed = outcome.passed && in_time;
        failed += !passed as usize;
        println!(
            "{} criterion {}: {name}: {} [{:.2} s, budget {budget} s{}]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" },
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
