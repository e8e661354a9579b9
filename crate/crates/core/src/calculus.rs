//! Weighted generator L^omega f = omega f'' + (omega' - omega V') f' (plus the
//! radial term), carre du champ and the functionals built on them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::{Grid, Measure, Potential, RealFn};

fn fd_step(x: f64) -> f64 {
    1e-5f64.max(1e-5 * x.abs())
}

/// A smooth function with its derivative; the second derivative falls back to
/// a central difference of the derivative.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    value: RealFn,
    d1: RealFn,
    d2: Option<RealFn>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).finish()
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction { name: name.into(), value: Arc::new(value), d1: Arc::new(d1), d2: None }
    }

    pub fn with_second(mut self, d2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        match &self.d2 {
            Some(d2) => d2(x),
            None => {
                let h = fd_step(x);
                (self.d1(x + h) - self.d1(x - h)) / (2.0 * h)
            }
        }
    }
}

/// A positive weight omega with derivative (finite differences when absent).
#[derive(Clone)]
pub struct Weight {
    pub name: String,
    value: RealFn,
    d1: Option<RealFn>,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight").field("name", &self.name).finish()
    }
}

impl Weight {
    pub fn new(name: impl Into<String>, value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Weight { name: name.into(), value: Arc::new(value), d1: None }
    }

    pub fn with_derivative(mut self, d1: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d1 = Some(Arc::new(d1));
        self
    }

    pub fn constant(c: f64) -> Self {
        Weight::new(format!("{c}"), move |_| c).with_derivative(|_| 0.0)
    }

    /// (1 + x^2)^k.
    pub fn bracket_power(k: f64) -> Self {
        Weight::new(format!("(1+x^2)^{k}"), move |x| (1.0 + x * x).powf(k))
            .with_derivative(move |x| 2.0 * k * x * (1.0 + x * x).powf(k - 1.0))
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        match &self.d1 {
            Some(d) => d(x),
            None => {
                let h = fd_step(x);
                (self.value(x + h) - self.value(x - h)) / (2.0 * h)
            }
        }
    }

    /// c * omega.
    pub fn scaled(&self, c: f64) -> Weight {
        let base = self.clone();
        let base_d = self.clone();
        Weight::new(format!("{c}*{}", self.name), move |x| c * base.value(x))
            .with_derivative(move |x| c * base_d.d1(x))
    }
}

/// L^omega f at x for the measure with potential V in dimension `dim` (radial if dim > 1).
pub fn generator_apply(f: &TestFunction, w: &Weight, v: &Potential, dim: usize, x: f64) -> Result<f64> {
    let fp = f.d1(x);
    let fpp = f.d2(x);
    let om = w.value(x);
    let mut lap = fpp;
    if dim > 1 {
        if x.abs() < 1e-12 {
            if fp.abs() > 1e-9 {
                return Err(Error::SingularOrigin(format!("{} has nonzero radial slope at 0", f.name)));
            }
            lap = dim as f64 * fpp;
        } else {
            lap += (dim as f64 - 1.0) * fp / x;
        }
    }
    Ok(om * lap + (w.d1(x) - om * v.grad(x)) * fp)
}

/// Gamma^omega(f, g)(x) = omega f' g'.
pub fn carre_du_champ(f: &TestFunction, g: &TestFunction, w: &Weight, x: f64) -> f64 {
    w.value(x) * f.d1(x) * g.d1(x)
}

/// t ln t with the convention 0 ln 0 = 0.
pub fn xlogx(t: f64) -> f64 {
    if t <= 0.0 { 0.0 } else { t * t.ln() }
}

/// g ln g - g + 1 >= 0, accurate near g = 1.
pub fn bregman_xlogx(g: f64) -> f64 {
    let d = g - 1.0;
    if d.abs() < 1e-3 {
        d * d * (0.5 - d / 6.0 + d * d / 12.0 - d * d * d / 20.0)
    } else if g <= 0.0 {
        1.0
    } else {
        g * g.ln() - d
    }
}

/// Ent_mu(f) for f >= 0.
pub fn entropy(f: impl Fn(f64) -> f64, mu: &Measure) -> Result<f64> {
    let negative = std::cell::Cell::new(None);
    let m = mu.expectation(|x| {
        let v = f(x);
        if v < 0.0 && negative.get().is_none() {
            negative.set(Some(x));
        }
        v
    });
    if let Some(x) = negative.get() {
        return Err(Error::NegativeInput(format!("entropy argument negative at x = {x}")));
    }
    let m = m?;
    let e = mu.expectation(|x| xlogx(f(x)))?;
    Ok((e - xlogx(m)).max(0.0))
}

pub fn variance(f: impl Fn(f64) -> f64, mu: &Measure) -> Result<f64> {
    let m = mu.expectation(&f)?;
    let v = mu.expectation(|x| {
        let d = f(x) - m;
        d * d
    })?;
    Ok(v.max(0.0))
}

/// int omega |f'|^2 dmu.
pub fn weighted_dirichlet(f: &TestFunction, w: &Weight, mu: &Measure) -> Result<f64> {
    mu.expectation(|x| {
        let d = f.d1(x);
        w.value(x) * d * d
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Divergent,
}

impl Moment {
    pub fn finite(self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Divergent => None,
        }
    }
}

/// mu(omega^p), evaluated in log space so that large powers do not overflow.
pub fn weight_moment(w: &Weight, p: f64, mu: &Measure) -> Moment {
    match mu.integrate_ln(|x| {
        let om = w.value(x);
        (1.0, p * om.ln())
    }) {
        Ok(v) if v.is_finite() => Moment::Finite(v),
        _ => Moment::Divergent,
    }
}

/// Values of f and f' together with the mu-weights on a grid; the discrete
/// versions of the functionals are computed from these.
#[derive(Clone, Debug)]
pub struct Sampled {
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub mu: Vec<f64>,
}

impl Sampled {
    pub fn new(f: &TestFunction, grid: &Grid, mu_weights: &[f64]) -> Self {
        Sampled {
            f: grid.nodes.iter().map(|&x| f.value(x)).collect(),
            df: grid.nodes.iter().map(|&x| f.d1(x)).collect(),
            mu: mu_weights.to_vec(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.f.iter().zip(&self.mu).map(|(f, m)| f * m).sum()
    }

    pub fn mean_abs(&self) -> f64 {
        self.f.iter().zip(&self.mu).map(|(f, m)| f.abs() * m).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.f.iter().zip(&self.mu).map(|(f, m)| f * f * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.f.iter().zip(&self.mu).map(|(f, w)| (f - m) * (f - m) * w).sum()
    }

    /// Ent(f^2) = int f^2 ln(f^2 / mean(f^2)). With g = f^2 / mean(f^2) the sum of m (g - 1)
    /// vanishes, so Ent = mean(f^2) sum m (g ln g - g + 1), free of cancellation.
    pub fn entropy_sq(&self) -> f64 {
        let total: f64 = self.mu.iter().sum();
        let s = self.second_moment() / total;
        if s <= 0.0 {
            return 0.0;
        }
        let e: f64 = self.f.iter().zip(&self.mu).map(|(f, m)| m * bregman_xlogx(f * f / s)).sum();
        s * e
    }

    pub fn osc(&self) -> f64 {
        let (lo, hi) = self.f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        hi - lo
    }

    /// int omega f'^2 dmu with omega given at the nodes.
    pub fn dirichlet(&self, omega: &[f64]) -> f64 {
        self.df.iter().zip(&self.mu).zip(omega).map(|((d, m), w)| w * d * d * m).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_builtin, MeasureKind};

    fn gaussian() -> Measure {
        make_builtin(MeasureKind::Gaussian, 1).unwrap()
    }

    #[test]
    fn ornstein_uhlenbeck_generator_on_x_squared() {
        let f = TestFunction::new("x^2", |x| x * x, |x| 2.0 * x);
        let v = Potential::gaussian();
        for x in [-2.0, 0.3, 1.7] {
            let l = generator_apply(&f, &Weight::constant(1.0), &v, 1, x).unwrap();
            assert!((l - (2.0 - 2.0 * x * x)).abs() < 1e-8);
        }
    }

    #[test]
    fn radial_generator_has_the_dimension_term() {
        let f = TestFunction::new("r^2", |x| x * x, |x| 2.0 * x).with_second(|_| 2.0);
        let v = Potential::gaussian();
        let l = generator_apply(&f, &Weight::constant(1.0), &v, 3, 1.5).unwrap();
        assert!((l - (6.0 - 2.0 * 1.5 * 1.5)).abs() < 1e-12);
        let at0 = generator_apply(&f, &Weight::constant(1.0), &v, 3, 0.0).unwrap();
        assert!((at0 - 6.0).abs() < 1e-12);
        let kink = TestFunction::new("r", |x| x, |_| 1.0).with_second(|_| 0.0);
        assert!(matches!(
            generator_apply(&kink, &Weight::constant(1.0), &v, 3, 0.0),
            Err(Error::SingularOrigin(_))
        ));
    }

    #[test]
    fn gaussian_entropy_of_exponential_tilt() {
        // Ent(e^{cx - c^2/2}) = c^2 / 2 under N(0,1).
        let mu = gaussian();
        let c = 0.8;
        let e = entropy(|x| (c * x - 0.5 * c * c).exp(), &mu).unwrap();
        assert!((e - 0.32).abs() < 1e-9);
    }

    #[test]
    fn entropy_rejects_negative_functions() {
        assert!(matches!(entropy(|x| x, &gaussian()), Err(Error::NegativeInput(_))));
    }

    #[test]
    fn weight_moment_detects_divergence() {
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        let w = Weight::bracket_power(1.0);
        // (1+x^2)^{p-2} integrable iff p < 3/2
        assert!(matches!(weight_moment(&w, 1.0, &mu), Moment::Finite(_)));
        assert_eq!(weight_moment(&w, 2.0, &mu), Moment::Divergent);
    }
}
