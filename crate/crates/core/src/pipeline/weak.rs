//! Weak logarithmic Sobolev inequality Ent(f^2) <= beta(s) int |f'|^2 dmu + s Osc(f)^2 from a
//! weighted LSI, through the level sets B_r = { omega <= r }, and 1-d capacities.

use serde::{Deserialize, Serialize};

use super::rate::{log_grid, RateFunction};
use crate::calculus::Weight;
use crate::error::{Error, Result};
use crate::lyapunov::drift_grid;
use crate::measure::Measure;
use crate::quadrature::{integrate, Tolerance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakLsi {
    pub c_frak: f64,
    /// level r, mu(omega > r) and g(r) = mu(B_r^c)(2 c + log(1 + e^2 / mu(B_r^c)))
    pub r: Vec<f64>,
    pub outer_mass: Vec<f64>,
    pub g: Vec<f64>,
    /// beta(s) = g^{-1}(s) = inf { r : g(r) <= s }
    pub beta: RateFunction,
}

impl WeakLsi {
    pub fn g_is_non_increasing(&self) -> bool {
        self.g.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Radii rho(r) with { omega > r } contained in { |x| > rho(r) }, found from the first node
/// where omega exceeds r and refined by bisection where omega is monotone.
struct LevelSets {
    nodes: Vec<f64>,
    omega: Vec<f64>,
    /// index from which omega is non-decreasing in |x|
    mono_from: usize,
}

impl LevelSets {
    fn new(mu: &Measure, weight: &Weight) -> Result<Self> {
        let far = mu.radius_for_tail(1e-15)?.max(50.0);
        let grid = drift_grid(mu, far, 4000);
        let nodes: Vec<f64> = grid.nodes.into_iter().filter(|&x| x >= 0.0).collect();
        let omega: Vec<f64> = nodes.iter().map(|&x| weight.value(x).max(weight.value(-x))).collect();
        let mut mono_from = nodes.len() - 1;
        while mono_from > 0 && omega[mono_from - 1] <= omega[mono_from] {
            mono_from -= 1;
        }
        if nodes[mono_from] > far / 10.0 {
            return Err(Error::NonMonotoneWeight(format!(
                "omega decreases at |x| = {} (search radius {far})",
                nodes[mono_from]
            )));
        }
        Ok(LevelSets { nodes, omega, mono_from })
    }

    fn rho(&self, weight: &Weight, r: f64) -> Option<f64> {
        let j = self.omega.iter().position(|&w| w > r)?;
        if j == 0 || j <= self.mono_from {
            return Some(if j == 0 { 0.0 } else { self.nodes[j - 1] });
        }
        let level = |x: f64| weight.value(x).max(weight.value(-x));
        let (mut a, mut b) = (self.nodes[j - 1], self.nodes[j]);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if level(m) > r { b = m } else { a = m }
        }
        Some(a)
    }
}

pub fn weak_lsi(mu: &Measure, weight: &Weight, c_frak: f64) -> Result<WeakLsi> {
    let sets = LevelSets::new(mu, weight)?;
    let w_min = sets.omega.iter().copied().fold(f64::INFINITY, f64::min);
    let w_max = *sets.omega.last().unwrap();
    let r = log_grid(w_min, w_max, 400);
    let mut outer_mass = Vec::with_capacity(r.len());
    for &ri in &r {
        let m = match sets.rho(weight, ri) {
            Some(rho) => mu.tail_mass(rho)?,
            None => 0.0,
        };
        outer_mass.push(m.clamp(0.0, 1.0));
    }
    // the mass is non-increasing in r by construction; enforce against quadrature noise
    for i in 1..outer_mass.len() {
        outer_mass[i] = outer_mass[i].min(outer_mass[i - 1]);
    }
    let g: Vec<f64> = outer_mass
        .iter()
        // ln(1 + e^2/m) written so that subnormal masses do not overflow
        .map(|&m| if m > 0.0 { m * (2.0 * c_frak + (m + (2.0f64).exp()).ln() - m.ln()) } else { 0.0 })
        .collect();
    let g_last = g.iter().copied().rfind(|&v| v > 0.0).unwrap_or(g[0]);
    let s = log_grid(g_last.max(1e-300), g[0], 200);
    let ln_beta = s
        .iter()
        .map(|&si| match g.iter().position(|&gv| gv <= si * (1.0 + 1e-12)) {
            Some(j) => r[j].ln(),
            None => f64::INFINITY,
        })
        .collect();
    let mut beta = RateFunction { s, ln_beta, closed_form: None, tail: None };
    beta.enforce_monotone();
    Ok(WeakLsi { c_frak, r, outer_mass, g, beta })
}

/// Cap_mu([a, inf), (m, inf)) = (int_m^a dx / (omega p))^{-1} on the line (omega = 1 when absent).
pub fn capacity_halfline(mu: &Measure, a: f64, m: f64, weight: Option<&Weight>) -> Result<f64> {
    if mu.dim != 1 {
        return Err(Error::ParameterOutOfRange("capacities are computed on the line only".into()));
    }
    if !(m < a) {
        return Err(Error::ParameterOutOfRange(format!("need m < a, got m = {m}, a = {a}")));
    }
    let mass = mu.upper_mass(m)?;
    if mass > 0.5 + 1e-9 {
        return Err(Error::MassTooLarge(format!("mu((m, inf)) = {mass} > 1/2 at m = {m}")));
    }
    let f = |x: f64| {
        let w = weight.map_or(1.0, |w| w.value(x));
        (-mu.ln_density(x)).exp() / w
    };
    let tol = Tolerance { abs: 0.0, rel: 1e-11, max_panels: 4000 };
    let est = integrate(&f, m, a, tol)?;
    Ok(1.0 / est.value)
}

/// One instance of the comparison Cap_omega(A) <= 2 r Cap(A) + 2 mu(B_r^c) with A = [a, rho(r)]
/// inside B_r and Omega = (m, inf). The right end of A costs no energy because 1/(omega p) is
/// not integrable at infinity, so both capacities are half-line capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityCheck {
    pub a: f64,
    pub r: f64,
    pub weighted: f64,
    pub unweighted: f64,
    pub outer_mass: f64,
    pub holds: bool,
}

pub fn capacity_comparison(mu: &Measure, weight: &Weight, m: f64, a_list: &[f64]) -> Result<Vec<CapacityCheck>> {
    let sets = LevelSets::new(mu, weight)?;
    let mut out = Vec::with_capacity(a_list.len());
    for &a in a_list {
        let r = 2.0 * weight.value(a).max(weight.value(-a));
        let weighted = capacity_halfline(mu, a, m, Some(weight))?;
        let unweighted = capacity_halfline(mu, a, m, None)?;
        let outer_mass = match sets.rho(weight, r) {
            Some(rho) => mu.tail_mass(rho)?,
            None => 0.0,
        };
        let rhs = 2.0 * r * unweighted + 2.0 * outer_mass;
        out.push(CapacityCheck { a, r, weighted, unweighted, outer_mass, holds: weighted <= rhs * (1.0 + 1e-9) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_builtin, MeasureKind};

    #[test]
    fn exponential_capacity_closed_form() {
        let mu = make_builtin(MeasureKind::Exponential, 1).unwrap();
        let cap = capacity_halfline(&mu, 2.0, 0.7, None).unwrap();
        // density e^{-|x|}/2 (up to the smoothing window at the origin): int_0.7^2 2 e^x dx
        let exact = 1.0 / (2.0 * (2f64.exp() - 0.7f64.exp()));
        assert!((cap / exact - 1.0).abs() < 1e-9, "{cap} {exact}");
        let w1 = Weight::constant(1.0);
        assert_eq!(capacity_halfline(&mu, 2.0, 0.7, Some(&w1)).unwrap(), cap);
        assert!(capacity_halfline(&mu, 3.0, 0.7, None).unwrap() < cap);
        assert!(matches!(capacity_halfline(&mu, 2.0, -0.5, None), Err(Error::MassTooLarge(_))));
    }

    #[test]
    fn g_is_monotone_and_inverse_is_consistent() {
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        let w = Weight::new("x2log", |x: f64| (1.0 + x * x) * (std::f64::consts::E + x * x).ln());
        let wl = weak_lsi(&mu, &w, 10.0).unwrap();
        assert!(wl.g_is_non_increasing());
        assert!(wl.beta.is_non_increasing());
        // power law mu(omega > r) ~ r^{-3/2} up to logs
        let i = wl.r.partition_point(|&r| r < 1e4);
        let j = wl.r.partition_point(|&r| r < 1e6);
        let slope = (wl.outer_mass[j] / wl.outer_mass[i]).ln() / (wl.r[j] / wl.r[i]).ln();
        assert!(slope < -1.2 && slope > -1.6, "{slope}");
    }

    #[test]
    fn oscillating_weight_is_rejected() {
        let mu = make_builtin(MeasureKind::Gaussian, 1).unwrap();
        let w = Weight::new("osc", |x: f64| 2.0 + x.sin());
        assert!(matches!(weak_lsi(&mu, &w, 1.0), Err(Error::NonMonotoneWeight(_))));
    }
}
