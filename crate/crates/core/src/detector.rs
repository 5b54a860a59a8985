//! Per-instance linear MMSE metrics.
//!
//! With `R = (I + γ H^H H)^{-1}`:
//!
//! * per-user SINR: `1/R_kk - 1`
//! * per-user MMSE: `ε² = tr(R)/K`
//! * determinant approximation: `ε̂² = 1/(1 + γ·exp(ln det(H^H H)/K))`
//! * mutual information `I_e = log2 det(I + γ H^H H)` and its Minkowski lower
//!   bound `I_lb = K·log2(1 + γ·det(H^H H)^{1/K})`
//!
//! Mutual information is reported in bits. `γ` is linear everywhere here.

use std::f64::consts::LN_2;

use crate::channel::ChannelInstance;
use crate::error::{Error, Result};
use crate::numerics::{logdet_hpd, regularize, Cholesky};

/// Every metric at one SNR for one channel instance.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceMetrics {
    pub gamma: f64,
    pub sinr_per_user: Vec<f64>,
    pub mmse_exact: f64,
    pub mmse_approx: f64,
    /// Total, bits/s/Hz.
    pub mutual_info: f64,
    pub mutual_info_lb: f64,
    /// Per user, bits/s/Hz.
    pub spectral_eff: f64,
    pub jensen_lb: f64,
}

fn check_gamma(gamma: f64) {
    assert!(
        gamma >= 0.0 && gamma.is_finite(),
        "SNR must be finite and non-negative, got {gamma}"
    );
}

/// Factorization of `I + γ H^H H`, reused by every metric at that SNR.
struct Regularized {
    logdet: f64,
    inv_diag: Vec<f64>,
}

impl Regularized {
    fn new(instance: &ChannelInstance, gamma: f64) -> Self {
        let k = instance.dim();
        if gamma == 0.0 {
            return Self {
                logdet: 0.0,
                inv_diag: vec![1.0; k],
            };
        }
        let ch = Cholesky::factor(&regularize(instance.gram(), gamma))
            .expect("I + γ H^H H is positive definite");
        Self {
            logdet: ch.logdet(),
            inv_diag: ch.inverse_diagonal(),
        }
    }

    fn mmse(&self) -> f64 {
        self.inv_diag.iter().sum::<f64>() / self.inv_diag.len() as f64
    }
}

/// `(1/K) ln det(H^H H)`, or `SingularChannel` when the Gram matrix is singular.
pub fn logdet_per_user(instance: &ChannelInstance) -> Result<f64> {
    logdet_hpd(instance.gram())
        .map(|v| v / instance.dim() as f64)
        .map_err(|_| Error::SingularChannel)
}

/// Approximation `1/(1 + γ·exp(L))` given the per-user log-determinant `L`.
#[inline]
pub fn mmse_approx_from_logdet(logdet_per_user: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        1.0 / (1.0 + gamma * logdet_per_user.exp())
    }
}

/// Minkowski bound `K·log2(1 + γ·exp(L))` in bits.
#[inline]
pub fn minkowski_lb_from_logdet(logdet_per_user: f64, k: usize, gamma: f64) -> f64 {
    if gamma == 0.0 {
        0.0
    } else {
        k as f64 * (gamma * logdet_per_user.exp()).ln_1p() / LN_2
    }
}

pub fn sinr_mmse(instance: &ChannelInstance, gamma: f64) -> Vec<f64> {
    check_gamma(gamma);
    if gamma == 0.0 {
        return vec![0.0; instance.dim()];
    }
    Regularized::new(instance, gamma)
        .inv_diag
        .iter()
        .map(|&r| (1.0 / r - 1.0).max(0.0))
        .collect()
}

pub fn mmse_exact(instance: &ChannelInstance, gamma: f64) -> f64 {
    check_gamma(gamma);
    Regularized::new(instance, gamma).mmse()
}

pub fn mmse_approx(instance: &ChannelInstance, gamma: f64) -> Result<f64> {
    check_gamma(gamma);
    Ok(mmse_approx_from_logdet(logdet_per_user(instance)?, gamma))
}

/// `I_e = log2 det(I + γ H^H H)`.
pub fn mutual_info(instance: &ChannelInstance, gamma: f64) -> f64 {
    check_gamma(gamma);
    Regularized::new(instance, gamma).logdet / LN_2
}

pub fn mutual_info_minkowski_lb(instance: &ChannelInstance, gamma: f64) -> Result<f64> {
    check_gamma(gamma);
    Ok(minkowski_lb_from_logdet(
        logdet_per_user(instance)?,
        instance.dim(),
        gamma,
    ))
}

/// `(1/K) Σ_k log2(1 + SINR_k)`, equal to `-(1/K) Σ_k log2 R_kk`.
pub fn spectral_efficiency(instance: &ChannelInstance, gamma: f64) -> f64 {
    check_gamma(gamma);
    let reg = Regularized::new(instance, gamma);
    spectral_eff_from_diag(&reg.inv_diag)
}

/// `-log2 ε²`, the Jensen lower bound on the per-instance spectral efficiency.
pub fn jensen_bound(instance: &ChannelInstance, gamma: f64) -> f64 {
    check_gamma(gamma);
    -Regularized::new(instance, gamma).mmse().log2()
}

fn spectral_eff_from_diag(inv_diag: &[f64]) -> f64 {
    -inv_diag.iter().map(|r| r.log2()).sum::<f64>() / inv_diag.len() as f64
}

/// Residual of `γ·dI_e/dγ = K(1 - ε²)` (natural-log units), with the
/// derivative taken by central difference of step `delta`.
pub fn immse_consistency_check(instance: &ChannelInstance, gamma: f64, delta: f64) -> f64 {
    assert!(gamma > 0.0, "consistency check needs γ > 0");
    assert!(delta > 0.0 && delta < gamma, "step must satisfy 0 < δ < γ");
    let nats = |g: f64| Regularized::new(instance, g).logdet;
    let derivative = (nats(gamma + delta) - nats(gamma - delta)) / (2.0 * delta);
    let k = instance.dim() as f64;
    (gamma * derivative - k * (1.0 - mmse_exact(instance, gamma))).abs()
}

/// Evaluates every metric at once, sharing the factorizations.
pub fn instance_metrics(instance: &ChannelInstance, gamma: f64) -> Result<InstanceMetrics> {
    let logdet = logdet_per_user(instance)?;
    Ok(metrics_with_logdet(instance, logdet, gamma))
}

pub(crate) fn metrics_with_logdet(
    instance: &ChannelInstance,
    logdet: f64,
    gamma: f64,
) -> InstanceMetrics {
    check_gamma(gamma);
    let reg = Regularized::new(instance, gamma);
    let mmse = reg.mmse();
    InstanceMetrics {
        gamma,
        sinr_per_user: reg
            .inv_diag
            .iter()
            .map(|&r| (1.0 / r - 1.0).max(0.0))
            .collect(),
        mmse_exact: mmse,
        mmse_approx: mmse_approx_from_logdet(logdet, gamma),
        mutual_info: reg.logdet / LN_2,
        mutual_info_lb: minkowski_lb_from_logdet(logdet, instance.dim(), gamma),
        spectral_eff: spectral_eff_from_diag(&reg.inv_diag),
        jensen_lb: -mmse.log2(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ComplexMatrix;

    fn identity(k: usize) -> ChannelInstance {
        ChannelInstance::from_matrix(ComplexMatrix::identity(k))
    }

    fn diag(d: &[f64]) -> ChannelInstance {
        ChannelInstance::from_matrix(ComplexMatrix::from_real_diag(d))
    }

    #[test]
    fn identity_channel_closed_values() {
        let inst = identity(4);
        assert!(sinr_mmse(&inst, 3.0)
            .iter()
            .all(|&s| (s - 3.0).abs() < 1e-12));
        for g in [0.1, 1.0, 10.0, 1e4] {
            let expect = 1.0 / (1.0 + g);
            assert!((mmse_exact(&inst, g) - expect).abs() < 1e-15);
            assert!((mmse_approx(&inst, g).unwrap() - expect).abs() < 1e-15);
            let bits = 4.0 * (1.0 + g).log2();
            assert!((mutual_info(&inst, g) - bits).abs() < 1e-12);
            assert!((mutual_info_minkowski_lb(&inst, g).unwrap() - bits).abs() < 1e-12);
            assert!((spectral_efficiency(&inst, g) - (1.0 + g).log2()).abs() < 1e-12);
            assert!((jensen_bound(&inst, g) - (1.0 + g).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_snr_limits() {
        let inst = diag(&[0.3, 2.0, 5.0]);
        assert_eq!(sinr_mmse(&inst, 0.0), vec![0.0; 3]);
        assert_eq!(mmse_exact(&inst, 0.0), 1.0);
        assert_eq!(mmse_approx(&inst, 0.0).unwrap(), 1.0);
        assert_eq!(mutual_info(&inst, 0.0), 0.0);
        assert_eq!(mutual_info_minkowski_lb(&inst, 0.0).unwrap(), 0.0);
        assert_eq!(spectral_efficiency(&inst, 0.0), 0.0);
        assert_eq!(jensen_bound(&inst, 0.0), 0.0);
    }

    #[test]
    fn two_user_hand_computed() {
        // eigenvalues {1, 4}, geometric mean 2
        let inst = diag(&[1.0, 2.0]);
        assert!((mmse_approx(&inst, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((mmse_exact(&inst, 1.0) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn mmse_matches_sinr_identity() {
        let inst = diag(&[0.2, 1.3, 3.0]);
        for g in [0.01, 1.0, 100.0] {
            let from_sinr: f64 = sinr_mmse(&inst, g)
                .iter()
                .map(|s| 1.0 / (1.0 + s))
                .sum::<f64>()
                / 3.0;
            assert!((from_sinr - mmse_exact(&inst, g)).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_channel_is_reported() {
        let h = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let inst = ChannelInstance::from_matrix(h);
        assert!(matches!(
            mmse_approx(&inst, 1.0),
            Err(Error::SingularChannel)
        ));
        assert!(matches!(
            mutual_info_minkowski_lb(&inst, 1.0),
            Err(Error::SingularChannel)
        ));
        assert!(matches!(
            instance_metrics(&inst, 1.0),
            Err(Error::SingularChannel)
        ));
        // exact MMSE stays defined
        let e = mmse_exact(&inst, 1.0);
        assert!(e > 0.0 && e <= 1.0);
    }

    #[test]
    fn immse_identity_case() {
        let r = immse_consistency_check(&identity(3), 1.0, 1e-5);
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn immse_is_second_order() {
        let inst = diag(&[0.4, 1.0, 2.5]);
        let r1 = immse_consistency_check(&inst, 1.0, 0.02);
        let r2 = immse_consistency_check(&inst, 1.0, 0.01);
        let ratio = r1 / r2;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn high_snr_minkowski_gap_settles() {
        let inst = diag(&[0.5, 0.9, 1.7, 2.2]);
        let gap = |g| mutual_info(&inst, g) - mutual_info_minkowski_lb(&inst, g).unwrap();
        assert!(gap(1e4) > 0.0);
        assert!((gap(1e6) - gap(1e4)).abs() < 1e-3);
    }

    #[test]
    fn combined_metrics_agree_with_single_calls() {
        let inst = diag(&[0.5, 0.9, 1.7]);
        let m = instance_metrics(&inst, 2.0).unwrap();
        assert_eq!(m.mmse_exact, mmse_exact(&inst, 2.0));
        assert_eq!(m.mmse_approx, mmse_approx(&inst, 2.0).unwrap());
        assert_eq!(m.sinr_per_user, sinr_mmse(&inst, 2.0));
        assert_eq!(m.mutual_info, mutual_info(&inst, 2.0));
        assert_eq!(m.spectral_eff, spectral_efficiency(&inst, 2.0));
        assert_eq!(m.jensen_lb, jensen_bound(&inst, 2.0));
        assert!(m.mutual_info >= m.mutual_info_lb);
        assert!(m.spectral_eff >= m.jensen_lb);
    }
}
