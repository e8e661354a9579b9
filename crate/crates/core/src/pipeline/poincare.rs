//! Poincare constants: from a super weighted Poincare rate, and directly from a drift certificate.

use serde::{Deserialize, Serialize};

use super::rate::RateFunction;
use crate::error::{Error, Result};
use crate::lyapunov::{drift_grid, Certificate};
use crate::measure::Measure;

/// Var(g) <= C int Gamma(g) omega dmu from mu(f^2) <= s int Gamma omega + beta(s) mu(|f|)^2
/// applied to f = g - mu(g): C = min s / (1 - beta(s)) over tabulated s with beta(s) < 1.
pub fn swpi_to_wpi(rate: &RateFunction) -> Result<f64> {
    let mut best = f64::INFINITY;
    let mut min_beta = f64::INFINITY;
    for (&s, &lb) in rate.s.iter().zip(&rate.ln_beta) {
        min_beta = min_beta.min(lb.exp());
        if lb < 0.0 {
            best = best.min(s / (1.0 - lb.exp()));
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NoTightening(format!("beta >= 1 on the tabulation (min beta = {min_beta:e})")))
    }
}

/// Constants entering the drift-based Poincare bounds on the ball A = B(0, r0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallFacts {
    /// Poincare constant of mu restricted to A: (sup p / inf p)(2 r0 / pi)^2
    pub kappa: f64,
    pub inf_phi_w: f64,
    pub sup_w: f64,
}

pub fn ball_facts(mu: &Measure, cert: &Certificate) -> BallFacts {
    let r0 = cert.r0;
    let (vmin, vmax) = mu.potential_range(r0);
    let kappa = (vmax - vmin).exp() * (2.0 * r0 / std::f64::consts::PI).powi(2);
    let mut ln_w_min = f64::INFINITY;
    let mut ln_w_max = f64::NEG_INFINITY;
    let n = 400;
    let lo = if mu.dim == 1 { -r0 } else { 0.0 };
    for i in 0..=n {
        let x = lo + (r0 - lo) * i as f64 / n as f64;
        let l = cert.w.ln_value(x, &mu.potential);
        ln_w_min = ln_w_min.min(l);
        ln_w_max = ln_w_max.max(l);
    }
    BallFacts { kappa, inf_phi_w: cert.phi.ln_value(ln_w_min.max(0.0)).exp(), sup_w: ln_w_max.exp() }
}

/// Weighted Poincare constant with omega = 1/(phi/psi)'(W) >= 1/phi'(W):
/// Var(g) <= (1 + b kappa_A / inf_A phi(W)) int Gamma(g) omega dmu.
pub fn lyapunov_weighted_poincare(mu: &Measure, cert: &Certificate) -> f64 {
    let f = ball_facts(mu, cert);
    1.0 + cert.b * f.kappa / f.inf_phi_w
}

/// Unweighted Poincare constant (1 + b kappa_A) / lambda when phi(u) >= lambda u on the range of W.
pub fn lyapunov_poincare(mu: &Measure, cert: &Certificate) -> Result<f64> {
    let r = mu.radius_for_tail(1e-12)?.max(50.0);
    let grid = drift_grid(mu, r, 2000);
    let lambda = grid
        .nodes
        .iter()
        .map(|&x| {
            let l = cert.w.ln_value(x, &mu.potential).max(0.0);
            cert.phi.ln_ratio(l).exp()
        })
        .fold(f64::INFINITY, f64::min)
        .min(cert.phi.ln_ratio(700.0).exp());
    if !(lambda > 1e-12) {
        return Err(Error::HypothesisFails("phi is sublinear: no linear drift for an unweighted Poincare bound".into()));
    }
    let f = ball_facts(mu, cert);
    Ok((1.0 + cert.b * f.kappa) / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::{cauchy_certificate, exponential_certificate};
    use crate::measure::{make_builtin, MeasureKind};
    use crate::pipeline::rate::log_grid;

    #[test]
    fn constant_half_rate() {
        let s = log_grid(0.01, 10.0, 30);
        let r = RateFunction::from_ln_fn(s, |_| 0.5f64.ln(), None);
        assert!((swpi_to_wpi(&r).unwrap() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn rate_above_one_has_no_tightening() {
        let r = RateFunction::from_ln_fn(log_grid(0.01, 10.0, 30), |_| 2f64.ln(), None);
        assert!(matches!(swpi_to_wpi(&r), Err(Error::NoTightening(_))));
    }

    #[test]
    fn cauchy_weighted_constant_is_finite() {
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        let cert = cauchy_certificate(&mu, 2.0, 3.0).unwrap();
        let c = lyapunov_weighted_poincare(&mu, &cert);
        // b = 6, phi(1) = 3, (sup p/inf p) = 9 on [-sqrt 2, sqrt 2]
        let exact = 1.0 + 6.0 / 3.0 * 9.0 * (2.0 * 2f64.sqrt() / std::f64::consts::PI).powi(2);
        assert!((c / exact - 1.0).abs() < 1e-4, "{c} {exact}");
        assert!(lyapunov_poincare(&mu, &cert).is_err());
    }

    #[test]
    fn exponential_unweighted_constant_bounds_four() {
        let mu = make_builtin(MeasureKind::Exponential, 1).unwrap();
        let cert = exponential_certificate(&mu, 0.5).unwrap();
        let c = lyapunov_poincare(&mu, &cert).unwrap();
        assert!(c >= 4.0 && c.is_finite());
    }
}
