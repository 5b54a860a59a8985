//! Independent oracles for the detector and numerics layers.

use corrmmse::channel::{
    realize_channel, ChannelInstance, CompositeParams, FadingModel, GainMatrix, MuUnits,
};
use corrmmse::detector::{
    instance_metrics, logdet_per_user, mmse_exact, mutual_info, sinr_mmse, spectral_efficiency,
};
use corrmmse::numerics::{exp_integral_e1, smallest_singular_value, ComplexMatrix, RngStream};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn composite() -> FadingModel {
    FadingModel::Composite(CompositeParams {
        rician_factor_db: 10.0,
        shadow_mean: -2.63,
        shadow_sigma: 0.5,
        mu_units: MuUnits::Natural,
    })
}

fn to_na(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn instances(n: usize, seed: u64) -> Vec<ChannelInstance> {
    let b = GainMatrix::synthetic(7, 0.3, None).unwrap();
    (0..n)
        .map(|t| realize_channel(&b, &composite(), &mut RngStream::new(seed, t as u64)))
        .collect()
}

/// Plain Gauss-Jordan inverse without pivot heuristics beyond partial pivoting.
fn gauss_jordan(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = DMatrix::<Complex64>::identity(n, n);
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[(i, c)].norm().total_cmp(&m[(j, c)].norm()))
            .unwrap();
        m.swap_rows(c, p);
        inv.swap_rows(c, p);
        let d = m[(c, c)];
        for j in 0..n {
            m[(c, j)] /= d;
            inv[(c, j)] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[(r, c)];
                for j in 0..n {
                    let (mc, ic) = (m[(c, j)], inv[(c, j)]);
                    m[(r, j)] -= f * mc;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
    }
    inv
}

#[test]
fn sinr_and_mmse_match_full_inversion() {
    for inst in instances(200, 11) {
        let g = to_na(inst.gram());
        let k = inst.dim();
        for gamma in [0.01, 1.0, 100.0, 1e4] {
            let r = gauss_jordan(&(DMatrix::identity(k, k) + g.scale(gamma)));
            let sinr = sinr_mmse(&inst, gamma);
            for i in 0..k {
                let want = 1.0 / r[(i, i)].re - 1.0;
                assert!(
                    (sinr[i] - want).abs() <= 1e-9 * want.abs().max(1.0),
                    "{} vs {want}",
                    sinr[i]
                );
            }
            let want = r.diagonal().iter().map(|z| z.re).sum::<f64>() / k as f64;
            assert!((mmse_exact(&inst, gamma) - want).abs() < 1e-9);
        }
    }
}

#[test]
fn logdet_and_mutual_info_match_eigenvalues() {
    for inst in instances(50, 12) {
        let k = inst.dim() as f64;
        let eig = to_na(inst.gram()).symmetric_eigen().eigenvalues;
        let ld: f64 = eig.iter().map(|l| l.ln()).sum::<f64>() / k;
        assert!((logdet_per_user(&inst).unwrap() - ld).abs() < 1e-9 * ld.abs().max(1.0));
        for gamma in [0.1, 10.0, 1e3] {
            let mi: f64 = eig.iter().map(|l| (1.0 + gamma * l).log2()).sum();
            assert!((mutual_info(&inst, gamma) - mi).abs() < 1e-9 * mi.max(1.0));
            let mmse: f64 = eig.iter().map(|l| 1.0 / (1.0 + gamma * l)).sum::<f64>() / k;
            let m = instance_metrics(&inst, gamma).unwrap();
            assert!((m.mmse_exact - mmse).abs() < 1e-10);
            assert!((m.mmse_approx - 1.0 / (1.0 + gamma * ld.exp())).abs() < 1e-10);
        }
    }
}

#[test]
fn spectral_efficiency_from_oracle_inverse() {
    for inst in instances(20, 13) {
        let k = inst.dim();
        let gamma = 5.0;
        let r = gauss_jordan(&(DMatrix::identity(k, k) + to_na(inst.gram()).scale(gamma)));
        let want = -r.diagonal().iter().map(|z| z.re.log2()).sum::<f64>() / k as f64;
        assert!((spectral_efficiency(&inst, gamma) - want).abs() < 1e-10);
    }
}

#[test]
fn smallest_singular_value_matches_svd() {
    let mut rng = RngStream::new(5, 0);
    for k in [1usize, 2, 5, 9] {
        for _ in 0..10 {
            let data: Vec<Complex64> = (0..k * k).map(|_| rng.complex_normal()).collect();
            let m = ComplexMatrix::new(k, k, data).unwrap();
            let sv = to_na(&m).singular_values();
            let want = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            let got = smallest_singular_value(&m);
            assert!(
                (got - want).abs() < 1e-8 * sv.max(),
                "k={k}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn gain_normalization_and_logdet_match_oracle() {
    let b = GainMatrix::synthetic(7, 0.3, None).unwrap();
    let m = to_na(b.matrix());
    let bh_b = m.adjoint() * &m;
    let tr: f64 = bh_b.diagonal().iter().map(|z| z.re).sum();
    assert!((tr - 7.0).abs() < 1e-12);
    let ld = bh_b
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.ln())
        .sum::<f64>()
        / 7.0;
    assert!((b.logdet_per_user() - ld).abs() < 1e-12);
}

/// `E₁(x) = e^{-x} ∫₀^∞ exp(-x(e^w - 1)) dw`, composite Simpson.
fn e1_quadrature(x: f64) -> f64 {
    let w_max = (1.0 + 80.0 / x).ln();
    let n = 20_000;
    let h = w_max / n as f64;
    let f = |w: f64| (-x * (w.exp() - 1.0)).exp();
    let mut s = f(0.0) + f(w_max);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    (-x).exp() * s * h / 3.0
}

/// 40-digit reference values on a log grid over [1e-3, 50].
#[allow(clippy::excessive_precision)]
const E1_TABLE: &[(f64, f64)] = &[
    (0.001, 6.3315393641361493112),
    (0.0013197340148878116, 6.0544287003779152546),
    (0.0017416978700519029, 5.7774201290246651991),
    (0.0022985779227651477, 5.5005462345503239215),
    (0.003033511470543335, 5.2238499768700302863),
    (0.0040034282722283855, 4.9473879769514986706),
    (0.005283460467023342, 4.6712348294699849012),
    (0.0069727624946457475, 4.3954887535849972358),
    (0.009202191841917987, 4.1202789796894221707),
    (0.012144445585302291, 3.8457753752717151999),
    (0.016027437930877554, 3.5722009361547063752),
    (0.021151955008882235, 3.2998479048323919277),
    (0.02791495450659851, 3.0290984105461813006),
    (0.03684031498640387, 2.7604506240974776438),
    (0.04861941680673839, 2.4945514222562415019),
    (0.0641646981438608, 2.2322363502980404911),
    (0.08468033469546193, 1.9745770663935093807),
    (0.11175551808968565, 1.7229351423920195717),
    (0.1474875585743683, 1.4790186244386528503),
    (0.19464434782335238, 1.2449335095052368691),
    (0.2568787666281325, 1.0232155991217425075),
    (0.3390116460215746, 0.81681867949117171363),
    (0.4474052006977782, 0.62902345494202599173),
    (0.590455861798566, 0.46322181251308313712),
    (0.7792446851054644, 0.32253189172352104906),
    (1.0283957168542233, 0.20922749803265740594),
    (1.3572088082974532, 0.12404118109057644606),
    (1.7911546296155003, 0.065531041146284029952),
    (2.3638476906273556, 0.029842440510558139886),
    (3.119650203334922, 0.011212538852840245827),
    (4.117108487892774, 0.0032804566032573908449),
    (5.433488114455418, 0.00069234325088083355804),
    (7.170759084135455, 0.000095271240593981355845),
    (9.463494675899332, 7.4782874752156458877e-6),
    (12.489295823494055, 2.8060423264845338177e-7),
    (16.48254852026139, 3.9847851060959063239e-9),
    (21.75257993422772, 1.5729702026829203412e-11),
    (28.707619650766404, 1.1482445406682538334e-14),
    (37.88642213957818, 9.0492337567244176799e-19),
    (49.99999999999999, 3.7832640295504864279e-24),
];

#[test]
fn e1_matches_reference_table() {
    for &(x, want) in E1_TABLE {
        let got = exp_integral_e1(x).unwrap();
        assert!(
            ((got - want) / want).abs() < 1e-13,
            "E1({x}) = {got}, want {want}"
        );
    }
}

#[test]
fn e1_matches_quadrature() {
    for &(x, _) in E1_TABLE {
        let got = exp_integral_e1(x).unwrap();
        let q = e1_quadrature(x);
        assert!(
            ((got - q) / q).abs() < 1e-10,
            "E1({x}) = {got}, quadrature {q}"
        );
    }
}
