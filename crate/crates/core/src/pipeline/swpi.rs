//! From a drift certificate to a super weighted Poincare inequality
//! mu(f^2) <= 2 s int Gamma(f) omega dmu + beta_tilde(s) mu(|f|)^2,
//! with omega = 1 / (phi/psi)'(W).

use serde::{Deserialize, Serialize};

use super::local::ln_beta_loc;
use super::rate::{default_grid, RateFunction};
use crate::calculus::Weight;
use crate::error::{Error, Result};
use crate::lyapunov::{drift_grid, Certificate, LyapunovFn, Phi};
use crate::measure::{Measure, Potential};

/// The increasing function psi >= 1 used to split phi = psi * (phi/psi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Psi {
    /// 1 + ln u
    OnePlusLog,
    /// ln(u - 1 + e^a): equals a at u = 1 and ln u + o(1) at infinity
    ShiftedLog { a: f64 },
    /// ShiftedLog with a = 1 + sup phi / (u phi'), resolved from the certificate
    Auto,
}

impl Psi {
    pub fn resolve(self, phi: &Phi, ln_u_range: &[f64]) -> Psi {
        match self {
            Psi::Auto => {
                let inv = ln_u_range.iter().map(|&l| 1.0 / phi.elasticity(l)).fold(0.0f64, f64::max);
                Psi::ShiftedLog { a: 1.0 + inv }
            }
            other => other,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Psi::OnePlusLog => "1+log(u)".into(),
            Psi::ShiftedLog { a } => format!("log(u-1+e^{a})"),
            Psi::Auto => "auto".into(),
        }
    }

    /// psi(u) given ln u.
    pub fn value(&self, ln_u: f64) -> f64 {
        match *self {
            Psi::OnePlusLog => 1.0 + ln_u,
            Psi::ShiftedLog { a } => ln_u + (a.exp_m1() * (-ln_u).exp()).ln_1p(),
            Psi::Auto => panic!("psi must be resolved before evaluation"),
        }
    }

    /// u psi'(u) given ln u.
    pub fn u_derivative(&self, ln_u: f64) -> f64 {
        match *self {
            Psi::OnePlusLog => 1.0,
            Psi::ShiftedLog { a } => 1.0 / (1.0 + a.exp_m1() * (-ln_u).exp()),
            Psi::Auto => panic!("psi must be resolved before evaluation"),
        }
    }
}

/// omega(x) = 1/(phi/psi)'(W(x)) for a certificate, evaluated in log space.
#[derive(Debug, Clone)]
pub struct WeightLaw {
    pub w: LyapunovFn,
    pub phi: Phi,
    pub psi: Psi,
    pub potential: Potential,
}

impl WeightLaw {
    /// ln (phi/psi)'(u) given ln u; NaN when the derivative is not positive.
    pub fn ln_chi_prime(&self, ln_u: f64) -> f64 {
        let psi = self.psi.value(ln_u);
        let num = self.phi.elasticity(ln_u) * psi - self.psi.u_derivative(ln_u);
        if !(num > 0.0) {
            return f64::NAN;
        }
        self.phi.ln_ratio(ln_u) + num.ln() - 2.0 * psi.ln()
    }

    pub fn ln_omega(&self, x: f64) -> f64 {
        -self.ln_chi_prime(self.w.ln_value(x, &self.potential))
    }

    pub fn weight(&self) -> Weight {
        let law = self.clone();
        Weight::new(format!("1/(phi/psi)'(W), psi={}", self.psi.label()), move |x| law.ln_omega(x).exp())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwpiOptions {
    pub cn: f64,
    pub s_grid: Vec<f64>,
    /// Scale phi down when (phi/psi)' exceeds 1 (a smaller phi keeps the drift condition).
    pub rescale_phi: bool,
}

impl SwpiOptions {
    pub fn new(cn: f64) -> Self {
        SwpiOptions { cn, s_grid: default_grid(), rescale_phi: true }
    }
}

#[derive(Debug, Clone)]
pub struct SwpiResult {
    pub certificate: Certificate,
    pub phi_scale: f64,
    pub law: WeightLaw,
    pub weight: Weight,
    pub beta_tilde: RateFunction,
    /// G^{-1}(s) at the tabulated s (+inf when beyond representable radii)
    pub g_inverse: Vec<f64>,
    pub c_r0: f64,
    pub cn: f64,
    pub chi_prime_min: f64,
    pub chi_prime_max: f64,
}

impl SwpiResult {
    /// Canonical form mu(f^2) <= s int Gamma omega + beta(s) mu(|f|)^2, i.e. beta(s) = beta_tilde(s/2).
    pub fn canonical_rate(&self) -> RateFunction {
        self.beta_tilde.rescale_time(2.0)
    }
}

/// Radii at which the hypotheses are verified.
fn hypothesis_nodes(mu: &Measure) -> Result<Vec<f64>> {
    let r = mu.radius_for_tail(1e-12)?.max(1e6);
    Ok(drift_grid(mu, r, 3000).nodes)
}

/// inf { t >= 0 : psi(W(t)) >= target } for radially non-decreasing psi(W).
fn g_inverse(law: &WeightLaw, dim: usize, target: f64) -> f64 {
    let level = |t: f64| {
        let a = law.psi.value(law.w.ln_value(t, &law.potential));
        if dim == 1 { a.min(law.psi.value(law.w.ln_value(-t, &law.potential))) } else { a }
    };
    if level(0.0) >= target {
        return 0.0;
    }
    let (mut lo, mut hi) = (-40.0f64, 690.0f64);
    if level(hi.exp()) < target {
        return f64::INFINITY;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if level(mid.exp()) >= target { hi = mid } else { lo = mid }
        if hi - lo < 1e-13 {
            break;
        }
    }
    hi.exp()
}

pub fn derive_swpi(mu: &Measure, cert: &Certificate, psi: Psi, opts: &SwpiOptions) -> Result<SwpiResult> {
    let v = &mu.potential;
    let nodes = hypothesis_nodes(mu)?;
    let ln_w: Vec<f64> = nodes.iter().map(|&x| cert.w.ln_value(x, v)).collect();
    if let Some((i, _)) = ln_w.iter().enumerate().find(|(_, &l)| l < -1e-12) {
        return Err(Error::HypothesisFails(format!("W < 1 at x = {}", nodes[i])));
    }
    let psi = psi.resolve(&cert.phi, &ln_w);
    if let Psi::ShiftedLog { a } = psi {
        if a < 1.0 {
            return Err(Error::HypothesisFails(format!("psi(1) = {a} < 1")));
        }
    }
    let mut law = WeightLaw { w: cert.w, phi: cert.phi, psi, potential: v.clone() };
    let mut cmin = f64::INFINITY;
    let mut cmax = f64::NEG_INFINITY;
    for (&x, &l) in nodes.iter().zip(&ln_w) {
        let c = law.ln_chi_prime(l);
        if c.is_nan() {
            return Err(Error::HypothesisFails(format!(
                "(phi/psi)'(W) <= 0 at x = {x} (W = {:e}) with psi = {}",
                l.exp(),
                psi.label()
            )));
        }
        cmin = cmin.min(c);
        cmax = cmax.max(c);
    }
    let mut phi_scale = 1.0;
    if cmax > 0.0 {
        if !opts.rescale_phi {
            return Err(Error::HypothesisFails(format!("(phi/psi)'(W) reaches {:e} > 1", cmax.exp())));
        }
        phi_scale = (-cmax).exp() * (1.0 - 1e-12);
        law.phi = law.phi.scaled(phi_scale);
        cmin += phi_scale.ln();
        cmax += phi_scale.ln();
    }
    let far = *nodes.last().unwrap();
    if !(law.psi.value(cert.w.ln_value(far, v)) > 2.0 * law.psi.value(cert.w.ln_value(far / 1e3, v)).max(1.0) - 1.0
        && cert.w.ln_value(far, v) > cert.w.ln_value(far / 1e3, v))
    {
        return Err(Error::HypothesisFails("psi(W) does not grow, so G does not tend to 0".into()));
    }
    let certificate = Certificate { phi: law.phi, ..*cert };

    // c_r0 = 1 + b sup_{A_r0} (psi/phi)(W) / inf_{A_r0^c} psi(W)
    let mut sup_ratio = f64::NEG_INFINITY;
    let mut inf_out = f64::INFINITY;
    for (&x, &l) in nodes.iter().zip(&ln_w) {
        if x.abs() <= cert.r0 {
            sup_ratio = sup_ratio.max(law.psi.value(l).ln() - law.phi.ln_value(l));
        } else {
            inf_out = inf_out.min(law.psi.value(l));
        }
    }
    for x in [cert.r0, -cert.r0] {
        let l = cert.w.ln_value(x, v);
        sup_ratio = sup_ratio.max(law.psi.value(l).ln() - law.phi.ln_value(l));
        inf_out = inf_out.min(law.psi.value(l));
    }
    let c_r0 = 1.0 + cert.b * sup_ratio.exp() / inf_out;

    let mut g_inv = Vec::with_capacity(opts.s_grid.len());
    let mut ln_beta = Vec::with_capacity(opts.s_grid.len());
    for &s in &opts.s_grid {
        let gi = g_inverse(&law, mu.dim, 1.0 / s);
        g_inv.push(gi);
        if gi.is_finite() {
            let r = gi.max(cert.r0).max(1e-12);
            ln_beta.push(c_r0.ln() + ln_beta_loc(mu, opts.cn, r, s / c_r0));
        } else {
            ln_beta.push(f64::INFINITY);
        }
    }
    let mut beta_tilde = RateFunction { s: opts.s_grid.clone(), ln_beta, closed_form: None, tail: None };
    beta_tilde.enforce_monotone();
    beta_tilde.fit_tail(40);
    let weight = law.weight();
    Ok(SwpiResult {
        certificate,
        phi_scale,
        law,
        weight,
        beta_tilde,
        g_inverse: g_inv,
        c_r0,
        cn: opts.cn,
        chi_prime_min: cmin.exp(),
        chi_prime_max: cmax.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::{cauchy_certificate, exponential_certificate};
    use crate::measure::{make_builtin, MeasureKind};

    #[test]
    fn shifted_log_is_log_at_infinity() {
        let p = Psi::ShiftedLog { a: 4.0 };
        assert!((p.value(0.0) - 4.0).abs() < 1e-12);
        assert!((p.value(50.0) - 50.0).abs() < 1e-18f64.max(1e-12));
        assert!((p.u_derivative(60.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_plus_log_fails_for_cauchy() {
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        let cert = cauchy_certificate(&mu, 2.0, 3.0).unwrap();
        let r = derive_swpi(&mu, &cert, Psi::OnePlusLog, &SwpiOptions::new(1.0));
        assert!(matches!(r, Err(Error::HypothesisFails(_))));
    }

    #[test]
    fn cauchy_weight_grows_like_x2_log_x() {
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        let cert = cauchy_certificate(&mu, 2.0, 3.0).unwrap();
        let res = derive_swpi(&mu, &cert, Psi::Auto, &SwpiOptions::new(1.0)).unwrap();
        assert!(res.chi_prime_max <= 1.0 && res.chi_prime_min > 0.0);
        let q = |x: f64| res.weight.value(x) / ((1.0 + x * x) * (std::f64::consts::E + x * x).ln());
        let (a, b) = (q(1e3), q(1e6));
        assert!((a / b - 1.0).abs() < 0.2, "{a} {b}");
        assert!(res.weight.value(0.0) >= 1.0);
        assert!(res.beta_tilde.is_non_increasing());
    }

    #[test]
    fn exponential_weight_is_linear() {
        let mu = make_builtin(MeasureKind::Exponential, 1).unwrap();
        let cert = exponential_certificate(&mu, 0.5).unwrap();
        let res = derive_swpi(&mu, &cert, Psi::Auto, &SwpiOptions::new(1.0)).unwrap();
        let q = |x: f64| res.weight.value(x) / (1.0 + x.abs());
        assert!((q(1e3) / q(1e5) - 1.0).abs() < 0.05);
    }
}
