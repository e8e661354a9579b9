//! phi-Lyapunov drift certificates LW <= -phi(W) + b 1_{|x| <= r0}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{ln1p_sq, Grid, Measure, Potential, SmoothPower};

/// Radius of the window on which |x|^alpha is smoothed inside exponential Lyapunov functions.
pub const LYAPUNOV_WINDOW: f64 = 1.0;

/// Radial Lyapunov function W >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LyapunovFn {
    /// (1 + |x|^2)^{k/2}
    BracketPower { k: f64 },
    /// exp(a * |x|^alpha) with |x|^alpha smoothed on [-h, h]
    ExpPower { a: f64, alpha: f64, h: f64 },
    /// exp(scale * V)
    ExpPotential { scale: f64 },
    /// 1 + |x|^2
    OnePlusSquare,
    /// constant c >= 1
    Constant { c: f64 },
}

impl LyapunovFn {
    /// (ln W, W'/W, W''/W) at x.
    pub fn log_derivs(&self, x: f64, v: &Potential) -> (f64, f64, f64) {
        match *self {
            LyapunovFn::BracketPower { k } => {
                let q = 1.0 + x * x;
                (0.5 * k * ln1p_sq(x), k * x / q, k * (1.0 + (k - 1.0) * x * x) / (q * q))
            }
            LyapunovFn::ExpPower { a, alpha, h } => {
                let s = SmoothPower::new(alpha, h);
                let d1 = s.d1(x);
                (a * s.value(x), a * d1, a * s.d2(x) + a * a * d1 * d1)
            }
            LyapunovFn::ExpPotential { scale } => {
                let g = v.grad(x);
                (scale * v.value(x), scale * g, scale * v.second(x) + scale * scale * g * g)
            }
            LyapunovFn::OnePlusSquare => {
                let q = 1.0 + x * x;
                (ln1p_sq(x), 2.0 * x / q, 2.0 / q)
            }
            LyapunovFn::Constant { c } => (c.ln(), 0.0, 0.0),
        }
    }

    pub fn ln_value(&self, x: f64, v: &Potential) -> f64 {
        match *self {
            LyapunovFn::BracketPower { k } => 0.5 * k * ln1p_sq(x),
            LyapunovFn::ExpPower { a, alpha, h } => a * SmoothPower::new(alpha, h).value(x),
            LyapunovFn::ExpPotential { scale } => scale * v.value(x),
            LyapunovFn::OnePlusSquare => ln1p_sq(x),
            LyapunovFn::Constant { c } => c.ln(),
        }
    }

    pub fn value(&self, x: f64, v: &Potential) -> f64 {
        self.ln_value(x, v).exp()
    }

    /// LW / W in dimension `dim` (radial when dim > 1).
    pub fn generator_ratio(&self, x: f64, v: &Potential, dim: usize) -> f64 {
        let (_, w1, w2) = self.log_derivs(x, v);
        let mut lap = w2;
        if dim > 1 {
            if x.abs() < 1e-12 {
                lap = dim as f64 * w2;
            } else {
                lap += (dim as f64 - 1.0) * w1 / x;
            }
        }
        lap - v.grad(x) * w1
    }
}

/// The rate phi in the drift condition, as a function of u = W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    /// c u^theta
    Power { c: f64, theta: f64 },
    /// lambda u
    Linear { lambda: f64 },
    /// c u (1 + (ln u / a)^{2/alpha})^{alpha - 1}, the multiplier c (1+|x|^2)^{alpha-1} W written through W
    SubexpInduced { c: f64, a: f64, alpha: f64 },
    /// slope * u + offset
    Affine { slope: f64, offset: f64 },
}

impl Phi {
    /// ln phi(u) given ln u.
    pub fn ln_value(&self, ln_u: f64) -> f64 {
        match *self {
            Phi::Power { c, theta } => c.ln() + theta * ln_u,
            Phi::Linear { lambda } => lambda.ln() + ln_u,
            Phi::SubexpInduced { c, a, alpha } => {
                let y = (ln_u.max(0.0) / a).powf(2.0 / alpha);
                c.ln() + ln_u + (alpha - 1.0) * y.ln_1p()
            }
            Phi::Affine { slope, offset } => (slope * ln_u.exp() + offset).ln(),
        }
    }

    /// ln(phi(u) / u) given ln u, without forming ln phi (which cancels for large u).
    pub fn ln_ratio(&self, ln_u: f64) -> f64 {
        match *self {
            Phi::Power { c, theta } => c.ln() + (theta - 1.0) * ln_u,
            Phi::Linear { lambda } => lambda.ln(),
            Phi::SubexpInduced { c, a, alpha } => {
                let y = (ln_u.max(0.0) / a).powf(2.0 / alpha);
                c.ln() + (alpha - 1.0) * y.ln_1p()
            }
            Phi::Affine { slope, offset } => (slope + offset * (-ln_u).exp()).ln(),
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        match *self {
            Phi::Affine { slope, offset } => slope * u + offset,
            _ => self.ln_value(u.ln()).exp(),
        }
    }

    /// Elasticity u phi'(u) / phi(u) given ln u.
    pub fn elasticity(&self, ln_u: f64) -> f64 {
        match *self {
            Phi::Power { theta, .. } => theta,
            Phi::Linear { .. } => 1.0,
            Phi::SubexpInduced { a, alpha, .. } => {
                let l = ln_u.max(1e-300);
                let y = (l / a).powf(2.0 / alpha);
                1.0 + (alpha - 1.0) * (2.0 / alpha) * y / ((1.0 + y) * l)
            }
            Phi::Affine { slope, offset } => {
                let u = ln_u.exp();
                slope * u / (slope * u + offset)
            }
        }
    }

    /// Derivative of the elasticity with respect to ln u (finite difference).
    pub fn elasticity_slope(&self, ln_u: f64) -> f64 {
        let h = 1e-5 * ln_u.abs().max(1.0);
        (self.elasticity(ln_u + h) - self.elasticity((ln_u - h).max(1e-12))) / (ln_u + h - (ln_u - h).max(1e-12))
    }

    pub fn scaled(&self, factor: f64) -> Phi {
        match *self {
            Phi::Power { c, theta } => Phi::Power { c: c * factor, theta },
            Phi::Linear { lambda } => Phi::Linear { lambda: lambda * factor },
            Phi::SubexpInduced { c, a, alpha } => Phi::SubexpInduced { c: c * factor, a, alpha },
            Phi::Affine { slope, offset } => Phi::Affine { slope: slope * factor, offset: offset * factor },
        }
    }
}

/// Drift certificate for a radial W on a measure in dimension `dim`; A_r is the ball of radius r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub w: LyapunovFn,
    pub phi: Phi,
    pub b: f64,
    pub r0: f64,
    /// Whether phi was obtained from a multiplier phi_hat(x) W.
    pub multiplier: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftResidual {
    /// max over nodes of (LW + phi(W) - b 1_A) / (1 + |LW| + phi(W))
    pub max_relative: f64,
    pub at: f64,
}

/// Relative drift tolerance.
pub const DRIFT_TOL: f64 = 1e-8;

fn drift_terms(w: &LyapunovFn, phi: &Phi, v: &Potential, dim: usize, x: f64) -> (f64, f64) {
    let ln_w = w.ln_value(x, v);
    let u = ln_w.exp();
    let lw = w.generator_ratio(x, v, dim) * u;
    let ph = match phi {
        Phi::Affine { .. } => phi.value(u),
        _ => phi.ln_value(ln_w).exp(),
    };
    (lw, ph)
}

impl Certificate {
    pub fn residual(&self, mu: &Measure, grid: &Grid) -> DriftResidual {
        let mut worst = DriftResidual { max_relative: f64::NEG_INFINITY, at: 0.0 };
        for &x in &grid.nodes {
            let (lw, ph) = drift_terms(&self.w, &self.phi, &mu.potential, mu.dim, x);
            let ind = if x.abs() <= self.r0 { self.b } else { 0.0 };
            let rel = (lw + ph - ind) / (1.0 + lw.abs() + ph.abs());
            if rel > worst.max_relative {
                worst = DriftResidual { max_relative: rel, at: x };
            }
        }
        worst
    }

    pub fn check(&self, mu: &Measure, grid: &Grid) -> bool {
        self.residual(mu, grid).max_relative <= DRIFT_TOL
    }

    /// ln W(x).
    pub fn ln_w(&self, mu: &Measure, x: f64) -> f64 {
        self.w.ln_value(x, &mu.potential)
    }
}

/// Nodes covering [-r, r] (or [0, r] radially) for drift checks: linear near the origin, log-spaced outside.
pub fn drift_grid(mu: &Measure, r_max: f64, n: usize) -> Grid {
    let mut pos: Vec<f64> = Vec::with_capacity(2 * n);
    let inner = r_max.min(4.0);
    for i in 0..=n {
        pos.push(inner * i as f64 / n as f64);
    }
    if r_max > inner {
        for i in 1..=n {
            pos.push(inner * (r_max / inner).powf(i as f64 / n as f64));
        }
    }
    let mut nodes: Vec<f64> = if mu.dim == 1 {
        pos.iter().rev().filter(|&&x| x > 0.0).map(|&x| -x).chain(pos.iter().copied()).collect()
    } else {
        pos
    };
    nodes.dedup();
    Grid::from_nodes(nodes)
}

/// Minimal (b, r0) making the certificate valid on the grid: r0 is the largest |x| at which
/// LW + phi(W) exceeds the tolerance, b the largest such excess inside the ball. Enlarging r0
/// can only raise b and sup_{A_r0} psi/phi(W), so the smallest feasible r0 also minimizes
/// b sup_{A_r0} psi/phi(W).
pub fn fit_b_r0(w: LyapunovFn, phi: Phi, mu: &Measure, grid: &Grid) -> Result<(f64, f64)> {
    let v = &mu.potential;
    let excess_at = |x: f64| {
        let (lw, ph) = drift_terms(&w, &phi, v, mu.dim, x);
        (lw + ph, DRIFT_TOL * (1.0 + lw.abs() + ph.abs()))
    };
    let nodes = &grid.nodes;
    let mut last: Option<usize> = None;
    for (i, &x) in nodes.iter().enumerate() {
        let (e, tol) = excess_at(x);
        if !e.is_finite() {
            return Err(Error::ConditionFails(format!("non-finite drift at x = {x}")));
        }
        if e > tol && last.is_none_or(|j| x.abs() > nodes[j].abs()) {
            last = Some(i);
        }
    }
    let Some(i) = last else { return Ok((0.0, 0.0)) };
    let xv = nodes[i];
    if xv.abs() >= 0.999 * grid.r_max {
        return Err(Error::ConditionFails(format!(
            "drift violated up to the edge of the grid (r = {})",
            grid.r_max
        )));
    }
    // Locate the crossing between the last violating node and its outer neighbour.
    let outer = if xv >= 0.0 { nodes.get(i + 1).copied() } else { i.checked_sub(1).map(|j| nodes[j]) };
    let mut r0 = xv.abs();
    if let Some(xo) = outer {
        let (mut lo, mut hi) = (xv.abs(), xo.abs());
        let sgn = if xv >= 0.0 { 1.0 } else { -1.0 };
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let (e, tol) = excess_at(sgn * mid);
            if e > tol { lo = mid } else { hi = mid }
        }
        r0 = hi;
    }
    // b: maximal excess over the ball, refined between nodes around the best node.
    let inside: Vec<f64> = nodes.iter().copied().filter(|x| x.abs() <= r0).collect();
    let mut b: f64 = 0.0;
    let mut best = 0;
    for (j, &x) in inside.iter().enumerate() {
        let (e, _) = excess_at(x);
        if e > b {
            b = e;
            best = j;
        }
    }
    if !inside.is_empty() {
        let lo = inside[best.saturating_sub(1)];
        let hi = inside[(best + 1).min(inside.len() - 1)];
        for k in 0..=64 {
            b = b.max(excess_at(lo + (hi - lo) * k as f64 / 64.0).0);
        }
    }
    b = b.max(excess_at(r0).0).max(excess_at(-r0).0);
    Ok((b.max(0.0) * (1.0 + 1e-6) + 1e-12, r0 * (1.0 + 1e-9)))
}

fn default_drift_grid(mu: &Measure) -> Result<Grid> {
    let r = mu.radius_for_tail(1e-12)?.max(50.0);
    Ok(drift_grid(mu, r, 2000))
}

fn fitted(w: LyapunovFn, phi: Phi, mu: &Measure, multiplier: bool) -> Result<Certificate> {
    let grid = default_drift_grid(mu)?;
    let (b, r0) = fit_b_r0(w, phi, mu, &grid)?;
    Ok(Certificate { w, phi, b, r0, multiplier })
}

/// W = (1+|x|^2)^{k/2}, phi(u) = c u^{(k-2)/k} with c = k(alpha+2-k)/2, alpha = 2 beta - n.
pub fn cauchy_certificate(mu: &Measure, beta: f64, k: f64) -> Result<Certificate> {
    let n = mu.dim as f64;
    let alpha = 2.0 * beta - n;
    if !(k > 2.0 && k < alpha + 2.0) {
        return Err(Error::ParameterOutOfRange(format!("k must lie in (2, {}), got {k}", alpha + 2.0)));
    }
    let phi = Phi::Power { c: 0.5 * k * (alpha + 2.0 - k), theta: (k - 2.0) / k };
    fitted(LyapunovFn::BracketPower { k }, phi, mu, false)
}

/// W = exp(a |x|) (smoothed on [-1, 1]), phi(u) = a(1-a) u (halved in dimension > 1).
pub fn exponential_certificate(mu: &Measure, a: f64) -> Result<Certificate> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::ParameterOutOfRange(format!("a must lie in (0, 1), got {a}")));
    }
    let lambda = if mu.dim == 1 { a * (1.0 - a) } else { 0.5 * a * (1.0 - a) };
    fitted(LyapunovFn::ExpPower { a, alpha: 1.0, h: LYAPUNOV_WINDOW }, Phi::Linear { lambda }, mu, false)
}

/// W = exp(a |x|^alpha) with multiplier phi_hat(x) = c (1 + |x|^2)^{alpha-1}, c = a(1-a) alpha^2 / 2.
pub fn subexp_certificate(mu: &Measure, alpha: f64, a: f64) -> Result<Certificate> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::ParameterOutOfRange(format!("alpha must lie in (1, 2), got {alpha}")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::ParameterOutOfRange(format!("a must lie in (0, 1), got {a}")));
    }
    let c = 0.5 * a * (1.0 - a) * alpha * alpha;
    fitted(
        LyapunovFn::ExpPower { a, alpha, h: LYAPUNOV_WINDOW },
        Phi::SubexpInduced { c, a, alpha },
        mu,
        true,
    )
}

/// W = e^{A V}, phi(u) = lambda u, under liminf (a |grad V|^2 - Delta V) > 0.
pub fn poincare_class_certificate(mu: &Measure, a: f64, scale: f64) -> Result<Certificate> {
    if !(a > 0.0 && a < 1.0 && scale > 0.0 && scale < 1.0) {
        return Err(Error::ParameterOutOfRange(format!("need a, A in (0, 1), got a={a}, A={scale}")));
    }
    let v = &mu.potential;
    let far = mu.radius_for_tail(1e-6)?;
    let cond = |x: f64| a * v.grad(x).powi(2) - v.laplacian(x, mu.dim);
    let mut liminf = f64::INFINITY;
    for m in [1.0, 10.0, 100.0, 1000.0] {
        liminf = liminf.min(cond(far * m));
        if mu.dim == 1 {
            liminf = liminf.min(cond(-far * m));
        }
    }
    if !(liminf > 1e-6) {
        return Err(Error::ConditionFails(format!("liminf a|grad V|^2 - Delta V = {liminf:e} is not positive")));
    }
    let w = LyapunovFn::ExpPotential { scale };
    let r_tail = mu.radius_for_tail(1e-2)?;
    let mut decay = f64::INFINITY;
    for i in 0..=200 {
        let x = r_tail * (1.0 + 9.0 * i as f64 / 200.0);
        decay = decay.min(-w.generator_ratio(x, v, mu.dim));
        if mu.dim == 1 {
            decay = decay.min(-w.generator_ratio(-x, v, mu.dim));
        }
    }
    if !(decay > 0.0) {
        return Err(Error::ConditionFails(format!("LW/W does not become negative (inf -LW/W = {decay:e})")));
    }
    fitted(w, Phi::Linear { lambda: 0.5 * decay }, mu, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityFacts {
    /// min over the grid of x V'(x) - (V(x) - V(0))
    pub min_gap: f64,
    /// V(x) - V(0) >= delta |x| for |x| >= radius
    pub delta: f64,
    pub radius: f64,
}

/// Convexity consequences x V'(x) >= V(x) - V(0) and linear growth beyond `radius`.
pub fn convexity_facts(v: &Potential, grid: &Grid, radius: f64) -> Result<ConvexityFacts> {
    if !v.convex {
        return Err(Error::NotConvex(format!("{} is not flagged convex", v.name)));
    }
    let v0 = v.value(0.0);
    let mut min_gap = f64::INFINITY;
    let mut delta = f64::INFINITY;
    for &x in &grid.nodes {
        let rise = v.value(x) - v0;
        min_gap = min_gap.min(x * v.grad(x) - rise);
        if x.abs() >= radius && x != 0.0 {
            delta = delta.min(rise / x.abs());
        }
    }
    if min_gap < -1e-8 {
        return Err(Error::NotConvex(format!("x V'(x) - (V(x) - V(0)) reaches {min_gap:e}")));
    }
    Ok(ConvexityFacts { min_gap, delta, radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_builtin, MeasureKind};

    #[test]
    fn cauchy_drift_formula() {
        // LW = k (1+x^2)^{k/2-2} [n + (k-2-alpha) x^2]
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        let w = LyapunovFn::BracketPower { k: 3.0 };
        for x in [0.0, 0.5, 2.0, 30.0] {
            let lw = w.generator_ratio(x, &mu.potential, 1) * w.value(x, &mu.potential);
            let exact = 3.0 * (1.0 + x * x).powf(-0.5) * (1.0 - 2.0 * x * x);
            assert!((lw - exact).abs() < 1e-10 * (1.0 + exact.abs()), "x={x}: {lw} vs {exact}");
        }
    }

    #[test]
    fn cauchy_certificate_k3_has_r0_sqrt2_and_b6() {
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        let c = cauchy_certificate(&mu, 2.0, 3.0).unwrap();
        assert!((c.b - 6.0).abs() < 1e-5);
        assert!((c.r0 - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn gaussian_quadratic_certificate_and_constant_w() {
        let mu = make_builtin(MeasureKind::Gaussian, 1).unwrap();
        let grid = drift_grid(&mu, 12.0, 800);
        let c = Certificate {
            w: LyapunovFn::OnePlusSquare,
            phi: Phi::Affine { slope: 1.0, offset: -1.0 },
            b: 3.0,
            r0: 2.0,
            multiplier: false,
        };
        assert!(c.check(&mu, &grid));
        let flat = Certificate { w: LyapunovFn::Constant { c: 1.0 }, phi: Phi::Linear { lambda: 0.5 }, b: 0.0, r0: 1.0, multiplier: false };
        assert!(!flat.check(&mu, &grid));
    }

    #[test]
    fn constructed_certificates_pass_finer_grids_and_are_minimal() {
        let cauchy = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        let cauchy5 = make_builtin(MeasureKind::Cauchy { beta: 5.0 }, 1).unwrap();
        let expo = make_builtin(MeasureKind::Exponential, 1).unwrap();
        let sub = make_builtin(MeasureKind::Subexp { alpha: 1.5 }, 1).unwrap();
        let gauss = make_builtin(MeasureKind::Gaussian, 1).unwrap();
        let cases = vec![
            (cauchy_certificate(&cauchy, 2.0, 3.0).unwrap(), &cauchy),
            (cauchy_certificate(&cauchy5, 5.0, 4.0).unwrap(), &cauchy5),
            (exponential_certificate(&expo, 0.5).unwrap(), &expo),
            (subexp_certificate(&sub, 1.5, 0.5).unwrap(), &sub),
            (poincare_class_certificate(&gauss, 0.5, 0.5).unwrap(), &gauss),
        ];
        for (cert, mu) in cases {
            let r = mu.radius_for_tail(1e-12).unwrap().max(50.0);
            let fine = drift_grid(mu, r, 20000);
            assert!(cert.check(mu, &fine), "{cert:?}: {:?}", cert.residual(mu, &fine));
            let coarse = drift_grid(mu, r, 2000);
            let less_b = Certificate { b: 0.9 * cert.b, ..cert };
            let less_r = Certificate { r0: 0.9 * cert.r0, ..cert };
            assert!(!less_b.check(mu, &coarse), "{cert:?}");
            assert!(!less_r.check(mu, &coarse), "{cert:?}");
        }
    }

    #[test]
    fn cauchy5_certificate_has_square_root_rate() {
        let mu = make_builtin(MeasureKind::Cauchy { beta: 5.0 }, 1).unwrap();
        let c = cauchy_certificate(&mu, 5.0, 4.0).unwrap();
        assert!(matches!(c.phi, Phi::Power { theta, .. } if (theta - 0.5).abs() < 1e-15));
    }

    #[test]
    fn certificates_round_trip_through_toml() {
        let mu = make_builtin(MeasureKind::Subexp { alpha: 1.5 }, 1).unwrap();
        let c = subexp_certificate(&mu, 1.5, 0.5).unwrap();
        let text = toml::to_string(&c).unwrap();
        let back: Certificate = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn cauchy_certificate_rejects_k_out_of_range() {
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        assert!(matches!(cauchy_certificate(&mu, 2.0, 6.0), Err(Error::ParameterOutOfRange(_))));
    }

    #[test]
    fn exponential_quarter_rate_is_exact_outside_window() {
        let mu = make_builtin(MeasureKind::Exponential, 1).unwrap();
        let c = exponential_certificate(&mu, 0.5).unwrap();
        assert_eq!(c.phi, Phi::Linear { lambda: 0.25 });
        assert!(c.r0 < 1.0);
        let w = c.w;
        for x in [1.5, 10.0, 30.0] {
            assert!((w.generator_ratio(x, &mu.potential, 1) + 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn poincare_class_fails_for_cauchy() {
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        assert!(matches!(poincare_class_certificate(&mu, 0.5, 0.5), Err(Error::ConditionFails(_))));
        let g = make_builtin(MeasureKind::Gaussian, 1).unwrap();
        assert!(poincare_class_certificate(&g, 0.5, 0.5).is_ok());
    }

    #[test]
    fn convexity_facts_for_gaussian_and_cauchy() {
        let grid = Grid::from_nodes((0..=400).map(|i| -10.0 + 0.05 * i as f64).collect());
        let f = convexity_facts(&Potential::gaussian(), &grid, 2.0).unwrap();
        assert!(f.min_gap >= 0.0 && f.min_gap < 1e-12);
        assert!((f.delta - 1.0).abs() < 1e-12);
        let flagged = Potential::new("x^2-like but concave", |x| -x * x, |x| -2.0 * x, |_| -2.0, true);
        assert!(matches!(convexity_facts(&flagged, &grid, 2.0), Err(Error::NotConvex(_))));
        assert!(matches!(convexity_facts(&Potential::cauchy(2.0), &grid, 2.0), Err(Error::NotConvex(_))));
        let e = convexity_facts(&Potential::japanese_bracket(), &grid, 2.0).unwrap();
        assert!(e.delta > 0.5);
    }
}
