//! Potentials, Boltzmann measures mu = e^{-V} dx / Z and quadrature grids.
//!
//! In dimension n > 1 every potential is radial and is described by its
//! profile on [0, infinity); integrals carry the factor r^{n-1}.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, gauss_legendre, Tolerance};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Half-width of the window on which |x| and |x|^alpha are smoothed.
pub const SMOOTHING_WINDOW: f64 = 1e-3;

/// ln(1 + x^2) without overflow for huge |x|.
pub fn ln1p_sq(x: f64) -> f64 {
    let a = x.abs();
    if a > 1e150 {
        2.0 * a.ln() + (1.0 / (a * a)).ln_1p()
    } else {
        (a * a).ln_1p()
    }
}

/// ln(e^a + e^b).
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Area of the unit sphere in R^n (n = 1 gives 2, the two points of S^0).
pub fn sphere_area(n: usize) -> f64 {
    // Gamma(n/2) for integer and half-integer arguments.
    let mut g = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < n as f64 / 2.0 - 1e-9 {
        g *= x;
        x += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / g
}

/// |x|^alpha, replaced on [-h, h] by the even quartic that matches value,
/// first and second derivative at +-h. Returns (value, d/dx, d2/dx2).
#[derive(Clone, Copy, Debug)]
pub struct SmoothPower {
    pub alpha: f64,
    pub h: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl SmoothPower {
    pub fn new(alpha: f64, h: f64) -> Self {
        let a = h.powf(alpha) * (alpha - 2.0) * (alpha - 4.0) / 8.0;
        let b = alpha * (4.0 - alpha) * h.powf(alpha - 2.0) / 4.0;
        let c = alpha * (alpha - 2.0) * h.powf(alpha - 4.0) / 8.0;
        SmoothPower { alpha, h, a, b, c }
    }

    pub fn value(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax >= self.h {
            ax.powf(self.alpha)
        } else {
            let x2 = x * x;
            self.a + x2 * (self.b + self.c * x2)
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax >= self.h {
            self.alpha * ax.powf(self.alpha - 1.0) * x.signum()
        } else {
            x * (2.0 * self.b + 4.0 * self.c * x * x)
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax >= self.h {
            self.alpha * (self.alpha - 1.0) * ax.powf(self.alpha - 2.0)
        } else {
            2.0 * self.b + 12.0 * self.c * x * x
        }
    }
}

/// A potential V given by its (radial) profile with first and second derivatives.
#[derive(Clone)]
pub struct Potential {
    pub name: String,
    value: RealFn,
    d1: RealFn,
    d2: RealFn,
    pub convex: bool,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential").field("name", &self.name).field("convex", &self.convex).finish()
    }
}

impl Potential {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        convex: bool,
    ) -> Self {
        Potential { name: name.into(), value: Arc::new(value), d1: Arc::new(d1), d2: Arc::new(d2), convex }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    pub fn second(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    /// Laplacian of the radial function V(|x|) in R^n at radius r.
    pub fn laplacian(&self, r: f64, dim: usize) -> f64 {
        if dim == 1 {
            return self.second(r);
        }
        if r.abs() < 1e-12 {
            return dim as f64 * self.second(0.0);
        }
        self.second(r) + (dim as f64 - 1.0) * self.grad(r) / r
    }

    /// V = beta * ln(1 + |x|^2).
    pub fn cauchy(beta: f64) -> Self {
        Potential::new(
            format!("cauchy(beta={beta})"),
            move |x| beta * ln1p_sq(x),
            move |x| 2.0 * beta * x / (1.0 + x * x),
            move |x| {
                let q = 1.0 + x * x;
                2.0 * beta * (1.0 - x * x) / (q * q)
            },
            false,
        )
    }

    /// V = |x|^2 / 2.
    pub fn gaussian() -> Self {
        Potential::new("gaussian", |x| 0.5 * x * x, |x| x, |_| 1.0, true)
    }

    /// V = |x|^alpha smoothed on the window [-h, h]; alpha = 1 is the exponential law.
    pub fn power(alpha: f64) -> Self {
        let s = SmoothPower::new(alpha, SMOOTHING_WINDOW);
        let name = if alpha == 1.0 { "exponential".to_string() } else { format!("subexp(alpha={alpha})") };
        Potential::new(name, move |x| s.value(x), move |x| s.d1(x), move |x| s.d2(x), alpha >= 1.0)
    }

    /// V = sqrt(1 + |x|^2).
    pub fn japanese_bracket() -> Self {
        Potential::new(
            "sqrt(1+x^2)",
            |x| x.hypot(1.0),
            |x| x / x.hypot(1.0),
            |x| x.hypot(1.0).powi(-3),
            true,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureKind {
    Cauchy { beta: f64 },
    Exponential,
    Subexp { alpha: f64 },
    Gaussian,
}

impl MeasureKind {
    pub fn label(&self) -> String {
        match self {
            MeasureKind::Cauchy { beta } => format!("cauchy(beta={beta})"),
            MeasureKind::Exponential => "exponential".into(),
            MeasureKind::Subexp { alpha } => format!("subexp(alpha={alpha})"),
            MeasureKind::Gaussian => "gaussian".into(),
        }
    }
}

/// The probability measure e^{-V} dx / Z on R (dim = 1) or radial on R^n.
#[derive(Clone, Debug)]
pub struct Measure {
    pub potential: Potential,
    pub dim: usize,
    /// ln of the radial normalizer: int_R e^{-V} dx for n = 1,
    /// int_0^inf r^{n-1} e^{-V(r)} dr for n > 1.
    pub log_z: f64,
    pub kind: Option<MeasureKind>,
}

fn quad_tol() -> Tolerance {
    Tolerance { abs: 1e-300, rel: 1e-11, max_panels: 6000 }
}

pub fn normalize(potential: Potential, dim: usize) -> Result<Measure> {
    if dim == 0 {
        return Err(Error::ParameterOutOfRange("dimension must be positive".into()));
    }
    let v0 = potential.value(0.0);
    let est = if dim == 1 {
        quadrature::integrate_line(&|x| (v0 - potential.value(x)).exp(), 1.0, quad_tol())?
    } else {
        let m = (dim - 1) as i32;
        quadrature::integrate_upper(&|r: f64| r.powi(m) * (v0 - potential.value(r)).exp(), 0.0, 1.0, quad_tol())?
    };
    if !(est.value > 0.0) || !est.value.is_finite() {
        return Err(Error::Divergent("normalizer is not a positive finite number".into()));
    }
    Ok(Measure { potential, dim, log_z: est.value.ln() - v0, kind: None })
}

pub fn make_builtin(kind: MeasureKind, dim: usize) -> Result<Measure> {
    let potential = match kind {
        MeasureKind::Cauchy { beta } => {
            if !(beta > dim as f64 / 2.0) {
                return Err(Error::ParameterOutOfRange(format!("cauchy requires beta > n/2, got beta={beta}, n={dim}")));
            }
            Potential::cauchy(beta)
        }
        MeasureKind::Exponential => Potential::power(1.0),
        MeasureKind::Subexp { alpha } => {
            if !(alpha > 1.0 && alpha <= 2.0) {
                return Err(Error::ParameterOutOfRange(format!("subexp requires alpha in (1, 2], got {alpha}")));
            }
            Potential::power(alpha)
        }
        MeasureKind::Gaussian => Potential::gaussian(),
    };
    let mut m = normalize(potential, dim)?;
    m.kind = Some(kind);
    Ok(m)
}

impl Measure {
    pub fn name(&self) -> String {
        match self.kind {
            Some(k) => k.label(),
            None => self.potential.name.clone(),
        }
    }

    /// ln of the Lebesgue density e^{-V(x)} / Z_n.
    pub fn ln_density(&self, x: f64) -> f64 {
        let ln_zn = if self.dim == 1 { self.log_z } else { self.log_z + sphere_area(self.dim).ln() };
        -self.potential.value(x) - ln_zn
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// Density of the 1-d representation: p(x) on R, or the law of |X| on [0, inf).
    pub fn line_density(&self, x: f64) -> f64 {
        if self.dim == 1 {
            (-self.potential.value(x) - self.log_z).exp()
        } else {
            let r = x.abs();
            if r == 0.0 {
                return 0.0;
            }
            ((self.dim as f64 - 1.0) * r.ln() - self.potential.value(r) - self.log_z).exp()
        }
    }

    /// ln of `line_density`.
    pub fn ln_line_density(&self, x: f64) -> f64 {
        if self.dim == 1 {
            -self.potential.value(x) - self.log_z
        } else {
            (self.dim as f64 - 1.0) * x.abs().ln() - self.potential.value(x) - self.log_z
        }
    }

    /// mu(f) for a function of x (n = 1) or of the radius (n > 1).
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.integrate_ln(|x| {
            let v = f(x);
            (v, 0.0)
        })
    }

    /// int g dmu where the integrand is supplied as (sign-carrying factor, extra log factor):
    /// the contribution at x is factor * exp(extra + ln line_density(x)).
    pub fn integrate_ln(&self, g: impl Fn(f64) -> (f64, f64)) -> Result<f64> {
        let h = |x: f64| {
            let (fac, extra) = g(x);
            if fac == 0.0 {
                return 0.0;
            }
            let lp = self.ln_line_density(x);
            let v = fac * (extra + lp).exp();
            // inf * 0 where the density has long underflowed
            if v.is_nan() && lp < -700.0 { 0.0 } else { v }
        };
        let est = if self.dim == 1 {
            quadrature::integrate_line(&h, 1.0, quad_tol())?
        } else {
            quadrature::integrate_upper(&h, 0.0, 1.0, quad_tol())?
        };
        Ok(est.value)
    }

    /// mu(|x| > r).
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::NegativeInput(format!("tail radius {r}")));
        }
        if r == 0.0 {
            return Ok(1.0);
        }
        let scale = self.decay_scale(r);
        let up = |x: f64| self.line_density(x);
        let right = quadrature::integrate_upper(&up, r, scale, quad_tol())?.value;
        if self.dim > 1 {
            return Ok(right.clamp(0.0, 1.0));
        }
        let left = quadrature::integrate_upper(&|x: f64| self.line_density(-x), r, scale, quad_tol())?.value;
        Ok((right + left).clamp(0.0, 1.0))
    }

    /// mu(x > a) for n = 1 (half-line mass).
    pub fn upper_mass(&self, a: f64) -> Result<f64> {
        if a <= 0.0 {
            let below =
                quadrature::integrate_upper(&|x: f64| self.line_density(-x), -a, self.decay_scale(-a), quad_tol())?.value;
            return Ok((1.0 - below).clamp(0.0, 1.0));
        }
        Ok(quadrature::integrate_upper(&|x: f64| self.line_density(x), a, self.decay_scale(a), quad_tol())?
            .value
            .clamp(0.0, 1.0))
    }

    /// Length over which the density decays beyond radius r: min(r, 1/|V'(r)|), at least 1e-3.
    fn decay_scale(&self, r: f64) -> f64 {
        let g = self.potential.grad(r).abs().max(self.potential.grad(-r).abs());
        let local = if g > 0.0 { 1.0 / g } else { f64::INFINITY };
        r.max(1.0).min(local).max(1e-3)
    }

    /// Smallest radius (up to a relative bisection tolerance) with tail mass <= tol.
    pub fn radius_for_tail(&self, tol: f64) -> Result<f64> {
        let mut hi = 1.0;
        while self.tail_mass(hi)? > tol {
            hi *= 2.0;
            if hi > 1e150 {
                return Err(Error::ParameterOutOfRange(format!("tail mass {tol:e} not reached")));
            }
        }
        let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.tail_mass(mid)? > tol {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-6 * hi {
                break;
            }
        }
        Ok(hi)
    }

    /// Extreme values of V over the ball of radius r, by sampling.
    pub fn potential_range(&self, r: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |x: f64| {
            let v = self.potential.value(x);
            lo = lo.min(v);
            hi = hi.max(v);
        };
        let n = 200;
        for i in 0..=n {
            let x = r * i as f64 / n as f64;
            visit(x);
            if self.dim == 1 {
                visit(-x);
            }
        }
        if r > 1e-3 {
            for i in 0..=n {
                let x = 1e-3 * (r / 1e-3).powf(i as f64 / n as f64);
                visit(x);
                if self.dim == 1 {
                    visit(-x);
                }
            }
        }
        (lo, hi)
    }
}

/// Quadrature nodes with positive Lebesgue weights on [-r_max, r_max] (n = 1)
/// or [0, r_max] (radial).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub r_max: f64,
    pub tail_mass_bound: f64,
}

/// Breakpoints `scale * sinh(u)` with u uniform, covering [lo, hi].
pub fn sinh_breakpoints(lo: f64, hi: f64, count: usize, scale: f64) -> Vec<f64> {
    let ul = (lo / scale).asinh();
    let uh = (hi / scale).asinh();
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                scale * (ul + (uh - ul) * i as f64 / (count - 1) as f64).sinh()
            }
        })
        .collect()
}

impl Grid {
    /// Composite Gauss-Legendre rule of the given order on sinh-graded panels.
    pub fn gauss_panels(lo: f64, hi: f64, panels: usize, order: usize, scale: f64) -> Grid {
        let bps = sinh_breakpoints(lo, hi, panels + 1, scale);
        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for w in bps.windows(2) {
            let c = 0.5 * (w[0] + w[1]);
            let h = 0.5 * (w[1] - w[0]);
            for (x, wt) in gx.iter().zip(&gw) {
                nodes.push(c + h * x);
                weights.push(h * wt);
            }
        }
        Grid { nodes, weights, r_max: hi.abs().max(lo.abs()), tail_mass_bound: 0.0 }
    }

    /// Gauss panels covering the region where mu has all but `tail_tol` of its mass.
    pub fn for_measure(measure: &Measure, tail_tol: f64, panels: usize) -> Result<Grid> {
        let r_max = measure.radius_for_tail(tail_tol)?;
        let lo = if measure.dim == 1 { -r_max } else { 0.0 };
        let mut g = Grid::gauss_panels(lo, r_max, panels, 8, 1.0);
        g.tail_mass_bound = measure.tail_mass(r_max)?;
        Ok(g)
    }

    /// Trapezoid weights for arbitrary increasing nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Grid {
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for i in 0..n.saturating_sub(1) {
            let h = nodes[i + 1] - nodes[i];
            weights[i] += 0.5 * h;
            weights[i + 1] += 0.5 * h;
        }
        let r_max = nodes.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Grid { nodes, weights, r_max, tail_mass_bound: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weights of mu at the nodes.
    pub fn mu_weights(&self, measure: &Measure) -> Vec<f64> {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * measure.line_density(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_power_is_c2_at_window_edge() {
        for alpha in [0.5, 1.0, 1.5, 3.0] {
            let s = SmoothPower::new(alpha, 1e-3);
            let h = 1e-3;
            let (i, o) = (h * (1.0 - 1e-12), h * (1.0 + 1e-12));
            assert!((s.value(i) - s.value(o)).abs() < 1e-12);
            assert!((s.d1(i) - s.d1(o)).abs() < 1e-9 * s.d1(o).abs().max(1.0));
            assert!((s.d2(i) - s.d2(o)).abs() < 1e-6 * s.d2(o).abs().max(1.0));
        }
    }

    #[test]
    fn cauchy_normalizer_matches_beta_function() {
        // int (1+x^2)^{-2} dx = pi/2
        let m = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        assert!((m.log_z - (PI / 2.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn exponential_normalizer_is_two() {
        let m = make_builtin(MeasureKind::Exponential, 1).unwrap();
        assert!((m.log_z.exp() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn cauchy_needs_beta_above_half_dimension() {
        assert!(matches!(make_builtin(MeasureKind::Cauchy { beta: 0.4 }, 1), Err(Error::ParameterOutOfRange(_))));
        assert!(matches!(make_builtin(MeasureKind::Cauchy { beta: 1.4 }, 3), Err(Error::ParameterOutOfRange(_))));
        assert!(matches!(normalize(Potential::cauchy(0.5), 1), Err(Error::Divergent(_))));
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn gaussian_grid_integrates_moments() {
        let m = make_builtin(MeasureKind::Gaussian, 1).unwrap();
        let g = Grid::for_measure(&m, 1e-14, 80).unwrap();
        let w = g.mu_weights(&m);
        let m0: f64 = w.iter().sum();
        let m4: f64 = g.nodes.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m4 - 3.0).abs() < 1e-10);
    }
}
