//! Experiment execution: sweep, crossing reports, and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::channel::{realize_channel, GainMatrix};
use crate::cli::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{
    find_crossing, linear_to_db, run_sweep_with_threads, CrossingReport, SweepResult,
};
use crate::numerics::RngStream;

pub const CROSSING_TOL: f64 = 1e-6;

/// Files produced by one `run`.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub sweep_csv: PathBuf,
    pub crossings_csv: PathBuf,
    pub plot_script: PathBuf,
    pub meta: PathBuf,
    pub result: SweepResult,
    pub warning: Option<String>,
}

/// Outcome of a crossing search, including instances where it cannot run.
#[derive(Debug, Clone)]
pub enum CrossingOutcome {
    Report(CrossingReport),
    Degenerate(usize),
    Singular(usize),
}

fn with_suffix(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{suffix}"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

pub const SWEEP_HEADER: &str = "gamma_db,mmse_exact_mean,mmse_exact_se,mmse_approx_mean,mmse_approx_se,closed_form,deviation_db,shift_db,spectral_eff_mean,jensen_lb_mean,mutual_info_mean,mutual_info_lb_mean,n_effective";

pub fn sweep_csv(r: &SweepResult) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for (i, db) in r.grid.db().into_iter().enumerate() {
        let fields = [
            num(db),
            num(r.mmse_exact.mean[i]),
            num(r.mmse_exact.std_error[i]),
            num(r.mmse_approx.mean[i]),
            num(r.mmse_approx.std_error[i]),
            num(r.closed_form[i]),
            num(r.deviation_db[i]),
            num(r.shift_db[i]),
            num(r.spectral_eff.mean[i]),
            num(r.jensen_lb.mean[i]),
            num(r.mutual_info.mean[i]),
            num(r.mutual_info_lb.mean[i]),
            r.n_trials.to_string(),
        ];
        let _ = writeln!(s, "{}", fields.join(","));
    }
    s
}

pub const CROSSINGS_HEADER: &str =
    "instance,status,gamma_star_db,gamma_lo_db,gamma_hi_db,relative_width,sign_pattern";

pub fn crossings_csv(outcomes: &[CrossingOutcome]) -> String {
    let mut s = String::from(CROSSINGS_HEADER);
    s.push('\n');
    for o in outcomes {
        let _ = match o {
            CrossingOutcome::Report(r) => match (r.gamma_star, r.bracket) {
                (Some(g), Some((lo, hi))) => writeln!(
                    s,
                    "{},found,{},{},{},{},{}",
                    r.instance_id,
                    num(linear_to_db(g)),
                    num(linear_to_db(lo)),
                    num(linear_to_db(hi)),
                    num(r.relative_width),
                    r.sign_pattern
                ),
                _ => writeln!(
                    s,
                    "{},absent,NaN,NaN,NaN,NaN,{}",
                    r.instance_id, r.sign_pattern
                ),
            },
            CrossingOutcome::Degenerate(id) => writeln!(s, "{id},degenerate,NaN,NaN,NaN,NaN,"),
            CrossingOutcome::Singular(id) => writeln!(s, "{id},singular,NaN,NaN,NaN,NaN,"),
        };
    }
    s
}

/// Gnuplot script drawing MC markers over the closed-form line.
pub fn plot_script(sweep_file_name: &str, image_name: &str, title: &str) -> String {
    format!(
        "# MMSE versus SNR: Monte Carlo markers, closed-form line\n\
         set datafile separator ','\n\
         set terminal pngcairo size 900,650\n\
         set output '{image_name}'\n\
         set title '{title}'\n\
         set xlabel 'SNR (dB)'\n\
         set ylabel 'MMSE'\n\
         set logscale y\n\
         set grid\n\
         set key bottom left\n\
         plot '{sweep_file_name}' using 1:2 skip 1 with points pt 7 title 'MC exact MMSE', \\\n\
         \x20    '{sweep_file_name}' using 1:4 skip 1 with points pt 6 ps 1.5 title 'MC approximation', \\\n\
         \x20    '{sweep_file_name}' using 1:6 skip 1 with lines lw 2 title 'closed form'\n"
    )
}

pub fn meta_text(cfg: &ExperimentConfig, b: &GainMatrix, r: &SweepResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# corrmmse {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# reload with: corrmmse run --config <this file>");
    let _ = writeln!(s, "# results do not depend on the worker count");
    let _ = writeln!(s, "# gain_logdet_per_user = {}", b.logdet_per_user());
    let _ = writeln!(s, "# trials_used = {}", r.n_trials);
    let _ = writeln!(s, "# trials_skipped = {}", r.skipped);
    if let Some(w) = b.warning() {
        let _ = writeln!(s, "# warning: {w}");
    }
    s.push_str(&cfg.to_text());
    s
}

/// Crossing search on the first `count` sweep instances.
pub fn crossing_outcomes(
    cfg: &ExperimentConfig,
    b: &GainMatrix,
    count: usize,
) -> Vec<CrossingOutcome> {
    let model = cfg.fading_model();
    (0..count)
        .map(|t| {
            let inst = realize_channel(b, &model, &mut RngStream::new(cfg.seed, t as u64));
            match find_crossing(&inst, t, cfg.crossing_gamma_max, CROSSING_TOL) {
                Ok(rep) => CrossingOutcome::Report(rep),
                Err(Error::DegenerateInstance { .. }) => CrossingOutcome::Degenerate(t),
                Err(_) => CrossingOutcome::Singular(t),
            }
        })
        .collect()
}

/// Runs the sweep and writes `<out>_sweep.csv`, `<out>_crossings.csv`,
/// `<out>_plot.gp` and `<out>_meta.txt`.
pub fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput> {
    let b = cfg.gain_matrix()?;
    let model = cfg.fading_model();
    model.validate()?;
    let grid = cfg.grid()?;
    let result = run_sweep_with_threads(&b, &model, &grid, cfg.trials, cfg.seed, threads)?;
    let crossings = crossing_outcomes(cfg, &b, cfg.crossing_instances.min(cfg.trials));

    let sweep_path = with_suffix(&cfg.out, "_sweep.csv");
    let crossings_path = with_suffix(&cfg.out, "_crossings.csv");
    let plot_path = with_suffix(&cfg.out, "_plot.gp");
    let meta_path = with_suffix(&cfg.out, "_meta.txt");
    let base = |p: &Path| {
        p.file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let image = base(&with_suffix(&cfg.out, "_mmse.png"));
    let title = format!(
        "{} fading, K = {}, {} trials",
        model.name(),
        b.dim(),
        result.n_trials
    );

    write_file(&sweep_path, &sweep_csv(&result))?;
    write_file(&crossings_path, &crossings_csv(&crossings))?;
    write_file(&plot_path, &plot_script(&base(&sweep_path), &image, &title))?;
    write_file(&meta_path, &meta_text(cfg, &b, &result))?;

    Ok(RunOutput {
        sweep_csv: sweep_path,
        crossings_csv: crossings_path,
        plot_script: plot_path,
        meta: meta_path,
        warning: b.warning().map(str::to_string),
        result,
    })
}
