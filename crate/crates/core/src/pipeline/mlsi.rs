//! Modified logarithmic Sobolev inequality
//! Ent(f^2) <= C int (H(eps^{-1} |f'/f|^2) f^2 + |f'|^2) dmu from a weighted LSI and an
//! exponential integrability condition on the weight.

use serde::{Deserialize, Serialize};

use crate::calculus::Weight;
use crate::error::{Error, Result};
use crate::measure::Measure;

/// H(x) = |x|^p and its Young conjugate H^y(y) = c |y|^q, 1/p + 1/q = 1,
/// with p = b / (2(b - 1)) and q = b / (2 - b) for the tail exponent b in (1, 2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungPair {
    pub exponent: f64,
    pub p: f64,
    pub q: f64,
    pub c: f64,
}

impl YoungPair {
    pub fn new(exponent: f64) -> Result<Self> {
        if !(exponent > 1.0 && exponent <= 2.0) {
            return Err(Error::ParameterOutOfRange(format!("Young pair exponent {exponent} outside (1, 2]")));
        }
        let p = exponent / (2.0 * (exponent - 1.0));
        if exponent == 2.0 {
            // H(x) = |x|: the conjugate is the indicator of [-1, 1]
            return Ok(YoungPair { exponent, p, q: f64::INFINITY, c: 0.0 });
        }
        let q = exponent / (2.0 - exponent);
        Ok(YoungPair { exponent, p, q, c: (p - 1.0) * p.powf(-q) })
    }

    pub fn h(&self, x: f64) -> f64 {
        x.abs().powf(self.p)
    }

    pub fn h_dual(&self, y: f64) -> f64 {
        if self.q.is_infinite() {
            return if y.abs() <= 1.0 { 0.0 } else { f64::INFINITY };
        }
        self.c * y.abs().powf(self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlsiResult {
    pub pair: YoungPair,
    /// constant of the weighted LSI Ent(f^2) <= c_lsi int |f'|^2 omega dmu
    pub c_lsi: f64,
    pub alpha: f64,
    pub ln_k: f64,
    pub epsilon: f64,
    pub poincare: f64,
    pub tau: f64,
    /// Ent(f^2) <= c_h int H(eps^{-1}|f'/f|^2) f^2 + c_k mu(f^2) (defective form)
    pub c_h: f64,
    pub c_k: f64,
    /// tight constant C = tau max(2, (ln K + 2) C_P)
    pub c: f64,
}

/// ln K(alpha) = ln int exp(alpha H^y(c_lsi omega)) dmu, +inf when the integral diverges.
pub fn ln_k(mu: &Measure, weight: &Weight, pair: &YoungPair, c_lsi: f64, alpha: f64) -> f64 {
    // the integrand is assembled in log space: exp(alpha H^y) overflows long before p underflows
    match mu.integrate_ln(|x| {
        let w = c_lsi * weight.value(x);
        let e = alpha * pair.h_dual(w);
        if e.is_infinite() { (1.0, f64::INFINITY) } else { (1.0, e) }
    }) {
        Ok(v) if v.is_finite() && v > 0.0 => v.ln(),
        _ => f64::INFINITY,
    }
}

/// Defective form: Ent(f^2) <= 2 int H(eps^{-1}|f'/f|^2) f^2 + ln K mu(f^2) with eps^q = alpha/2,
/// then tightened with the Poincare constant and the configurable factor tau.
pub fn modified_lsi(
    mu: &Measure,
    weight: &Weight,
    c_lsi: f64,
    exponent: f64,
    poincare: f64,
    tau: f64,
) -> Result<MlsiResult> {
    let pair = YoungPair::new(exponent)?;
    // largest alpha on a log grid with K finite, then half of it
    let mut largest = None;
    for i in 0..=60 {
        let alpha = 10f64.powf(2.0 - 0.25 * i as f64);
        if ln_k(mu, weight, &pair, c_lsi, alpha).is_finite() {
            largest = Some(alpha);
            break;
        }
    }
    let alpha_max = largest.ok_or(Error::DivergentK)?;
    let alpha = 0.5 * alpha_max;
    let lk = ln_k(mu, weight, &pair, c_lsi, alpha);
    if !lk.is_finite() {
        return Err(Error::DivergentK);
    }
    let epsilon = if pair.q.is_infinite() { 1.0 } else { (alpha / 2.0).powf(1.0 / pair.q) };
    let c_k = lk.max(0.0);
    let c = tau * 2f64.max((c_k + 2.0) * poincare);
    Ok(MlsiResult { pair, c_lsi, alpha, ln_k: lk, epsilon, poincare, tau, c_h: 2.0, c_k, c })
}
