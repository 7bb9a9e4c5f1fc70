//! Location-scale Student's t likelihood and sampling.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

const HALF_LN_PI: f64 = 0.572_364_942_924_700_1;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Parameters of the per-step predictive distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistParams {
    pub mu: f64,
    pub sigma: f64,
    pub nu: f64,
}

impl DistParams {
    pub fn new(mu: f64, sigma: f64, nu: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0 && nu > 2.0) {
            return Err(Error::Domain(format!(
                "invalid Student's t parameters mu={mu}, sigma={sigma}, nu={nu}"
            )));
        }
        Ok(Self { mu, sigma, nu })
    }
}

/// Negative log density of the location-scale Student's t at `y`.
///
/// Accepts any `nu > 0`; [`DistParams`] is stricter because the forecaster
/// needs finite variance.
pub fn student_t_nll(y: f64, mu: f64, sigma: f64, nu: f64) -> Result<f64> {
    if !(sigma > 0.0 && nu > 0.0 && y.is_finite() && mu.is_finite() && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "Student's t NLL undefined for sigma={sigma}, nu={nu}"
        )));
    }
    Ok(nll_grad(y, mu, sigma, nu).0)
}

/// NLL together with its partial derivatives `(nll, d/dmu, d/dsigma, d/dnu)`.
pub(crate) fn nll_grad(y: f64, mu: f64, sigma: f64, nu: f64) -> (f64, f64, f64, f64) {
    let z = (y - mu) / sigma;
    let z2 = z * z;
    let log_term = (z2 / nu).ln_1p();
    let half_np1 = 0.5 * (nu + 1.0);
    let nll = ln_gamma(0.5 * nu) - ln_gamma(half_np1)
        + 0.5 * nu.ln()
        + HALF_LN_PI
        + sigma.ln()
        + half_np1 * log_term;
    let denom = nu + z2;
    let d_mu = -(nu + 1.0) * z / (sigma * denom);
    let d_sigma = (1.0 - (nu + 1.0) * z2 / denom) / sigma;
    let d_nu = 0.5
        * (digamma(0.5 * nu) - digamma(half_np1) + 1.0 / nu + log_term
            - (nu + 1.0) * z2 / (nu * denom));
    (nll, d_mu, d_sigma, d_nu)
}

/// Gaussian NLL and `(d/dmu, d/dsigma)`.
pub(crate) fn gaussian_nll_grad(y: f64, mu: f64, sigma: f64) -> (f64, f64, f64) {
    let z = (y - mu) / sigma;
    let nll = HALF_LN_2PI + sigma.ln() + 0.5 * z * z;
    (nll, -z / sigma, (1.0 - z * z) / sigma)
}

/// Draws `mu + sigma * N(0,1) / sqrt(chi2(nu) / nu)`.
pub fn sample_student_t<R: Rng + ?Sized>(rng: &mut R, p: DistParams) -> f64 {
    let n: f64 = StandardNormal.sample(rng);
    let chi = ChiSquared::new(p.nu)
        .expect("nu > 2 checked by DistParams")
        .sample(rng);
    p.mu + p.sigma * n / (chi / p.nu).sqrt()
}

pub fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64) -> f64 {
    let n: f64 = StandardNormal.sample(rng);
    mu + sigma * n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cauchy_mode() {
        let v = student_t_nll(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::PI.ln(), epsilon = 1e-12);
    }

    #[test]
    fn gaussian_limit() {
        let v = student_t_nll(0.0, 0.0, 1.0, 1e6).unwrap();
        assert!((v - 0.918_94).abs() < 1e-3, "{v}");
    }

    #[test]
    fn mu_gradient_vanishes_at_location() {
        let (_, d_mu, _, _) = nll_grad(1.5, 1.5, 0.7, 4.0);
        assert_eq!(d_mu, 0.0);
    }

    #[test]
    fn partials_match_finite_differences() {
        let (y, mu, s, nu) = (0.3, -0.2, 0.8, 3.7);
        let (_, dm, ds, dn) = nll_grad(y, mu, s, nu);
        let f = |m: f64, s: f64, n: f64| nll_grad(y, m, s, n).0;
        let e = 1e-6;
        assert_abs_diff_eq!(dm, (f(mu + e, s, nu) - f(mu - e, s, nu)) / (2.0 * e), epsilon = 1e-8);
        assert_abs_diff_eq!(ds, (f(mu, s + e, nu) - f(mu, s - e, nu)) / (2.0 * e), epsilon = 1e-8);
        assert_abs_diff_eq!(dn, (f(mu, s, nu + e) - f(mu, s, nu - e)) / (2.0 * e), epsilon = 1e-8);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(student_t_nll(0.0, 0.0, 0.0, 3.0).is_err());
        assert!(student_t_nll(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(DistParams::new(0.0, 1.0, 2.0).is_err());
        assert!(DistParams::new(0.0, 1.0, 2.5).is_ok());
    }
}
