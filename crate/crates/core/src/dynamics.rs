//! Weighted Langevin diffusion dX = (omega' - omega V') dt + sqrt(2 omega) dB reflected at +-R,
//! and the moment, tail and deviation consequences of a weighted LSI.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::calculus::{weight_moment, Moment, TestFunction, Weight};
use crate::error::{Error, Result};
use crate::measure::Measure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeConfig {
    pub dt: f64,
    pub steps: usize,
    pub replicas: usize,
    pub seed: u64,
    /// reflection radius R; 0 means "radius with tail mass 1e-6"
    pub reflect_radius: f64,
    /// initial law: uniform on [a, b] (bounded density with respect to mu)
    pub start: (f64, f64),
    /// steps discarded before time averages are accumulated
    pub burn_in: usize,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig { dt: 1e-3, steps: 10_000, replicas: 1000, seed: 7, reflect_radius: 0.0, start: (-1.0, 1.0), burn_in: 0 }
    }
}

/// Drift and diffusion tabulated on a uniform grid over [-R, R], linearly interpolated.
struct Coefficients {
    r: f64,
    h: f64,
    drift: Vec<f64>,
    sigma: Vec<f64>,
    sup_omega: f64,
}

impl Coefficients {
    fn new(mu: &Measure, weight: &Weight, r: f64) -> Self {
        let n = 20_001;
        let h = 2.0 * r / (n - 1) as f64;
        let mut drift = Vec::with_capacity(n);
        let mut sigma = Vec::with_capacity(n);
        let mut sup_omega = 0.0f64;
        for i in 0..n {
            let x = -r + h * i as f64;
            let w = weight.value(x);
            sup_omega = sup_omega.max(w);
            drift.push(weight.d1(x) - w * mu.potential.grad(x));
            sigma.push((2.0 * w).sqrt());
        }
        Coefficients { r, h, drift, sigma, sup_omega }
    }

    fn at(&self, x: f64) -> (f64, f64) {
        let t = ((x + self.r) / self.h).clamp(0.0, (self.drift.len() - 1) as f64);
        let i = (t as usize).min(self.drift.len() - 2);
        let u = t - i as f64;
        (
            self.drift[i] + u * (self.drift[i + 1] - self.drift[i]),
            self.sigma[i] + u * (self.sigma[i + 1] - self.sigma[i]),
        )
    }

    fn reflect(&self, mut x: f64) -> f64 {
        let r = self.r;
        while x > r || x < -r {
            x = if x > r { 2.0 * r - x } else { -2.0 * r - x };
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub reflect_radius: f64,
    pub final_positions: Vec<f64>,
    /// per observable, per replica: time average over the steps after burn-in
    pub averages: Vec<Vec<f64>>,
    pub horizon: f64,
}

pub fn reflect_radius(mu: &Measure, cfg: &SdeConfig) -> Result<f64> {
    if cfg.reflect_radius > 0.0 { Ok(cfg.reflect_radius) } else { mu.radius_for_tail(1e-6) }
}

/// Euler-Maruyama with reflection. Replica i draws from the ChaCha stream (seed, i), so results
/// do not depend on how replicas are scheduled.
pub fn simulate(mu: &Measure, weight: &Weight, cfg: &SdeConfig, observables: &[&dyn Fn(f64) -> f64]) -> Result<Simulation> {
    if mu.dim != 1 {
        return Err(Error::ParameterOutOfRange("simulation is one-dimensional".into()));
    }
    if !(cfg.dt > 0.0) || cfg.steps == 0 || cfg.replicas == 0 {
        return Err(Error::ParameterOutOfRange("dt, steps and replicas must be positive".into()));
    }
    let r = reflect_radius(mu, cfg)?;
    let coef = Coefficients::new(mu, weight, r);
    if cfg.dt * coef.sup_omega > 0.1 {
        return Err(Error::StabilityViolation(format!(
            "dt * sup omega = {} > 0.1 (dt = {}, sup omega = {})",
            cfg.dt * coef.sup_omega,
            cfg.dt,
            coef.sup_omega
        )));
    }
    let (a, b) = (cfg.start.0.max(-r), cfg.start.1.min(r));
    let start = Uniform::new_inclusive(a, b).map_err(|e| Error::ParameterOutOfRange(e.to_string()))?;
    let sq = cfg.dt.sqrt();
    let mut finals = Vec::with_capacity(cfg.replicas);
    let mut averages = vec![Vec::with_capacity(cfg.replicas); observables.len()];
    let counted = cfg.steps.saturating_sub(cfg.burn_in).max(1) as f64;
    for i in 0..cfg.replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let mut x: f64 = start.sample(&mut rng);
        let mut sums = vec![0.0; observables.len()];
        for step in 0..cfg.steps {
            let (drift, sigma) = coef.at(x);
            let z: f64 = StandardNormal.sample(&mut rng);
            x = coef.reflect(x + drift * cfg.dt + sigma * sq * z);
            if step >= cfg.burn_in {
                for (s, f) in sums.iter_mut().zip(observables) {
                    *s += f(x);
                }
            }
        }
        finals.push(x);
        for (k, s) in sums.into_iter().enumerate() {
            averages[k].push(s / counted);
        }
    }
    Ok(Simulation { reflect_radius: r, final_positions: finals, averages, horizon: cfg.dt * cfg.steps as f64 })
}

/// CDF of mu restricted to [-R, R] and renormalised.
pub fn restricted_cdf(mu: &Measure, r: f64) -> Result<impl Fn(f64) -> f64> {
    let n = 40_001;
    let h = 2.0 * r / (n - 1) as f64;
    let dens: Vec<f64> = (0..n).map(|i| mu.line_density(-r + h * i as f64)).collect();
    // Simpson on each pair of cells, trapezoid for the interpolation inside a cell
    let mut cum = vec![0.0; n];
    for i in 1..n {
        cum[i] = cum[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
    }
    let total = cum[n - 1];
    Ok(move |x: f64| {
        if x <= -r {
            return 0.0;
        }
        if x >= r {
            return 1.0;
        }
        let t = (x + r) / h;
        let i = (t as usize).min(n - 2);
        let u = t - i as f64;
        // exact integral of the linear interpolant of the density over the partial cell
        let part = h * u * (dens[i] + 0.5 * u * (dens[i + 1] - dens[i]));
        (cum[i] + part) / total
    })
}

/// sup |F_n - F| for the samples against a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov critical value at level 1%.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Quantile of mu (n = 1) by bisection on the half-line mass.
pub fn quantile(mu: &Measure, q: f64) -> Result<f64> {
    let cdf = |x: f64| -> Result<f64> { Ok(1.0 - mu.upper_mass(x)?) };
    let mut hi = 1.0;
    while cdf(hi)? < q {
        hi *= 2.0;
    }
    let mut lo = -1.0;
    while cdf(lo)? > q {
        lo *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid)? < q { lo = mid } else { hi = mid }
        if hi - lo < 1e-12 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub q: f64,
    pub empirical: f64,
    pub exact: f64,
    /// standard error sqrt(q(1-q)/n) / p(x_q)
    pub std_error: f64,
    pub within_3se: bool,
}

/// Empirical quantiles against those of mu restricted to [-r, r] (the law a reflected chain
/// samples).
pub fn quantile_comparison(mu: &Measure, r: f64, samples: &[f64], qs: &[f64]) -> Result<Vec<QuantileRow>> {
    let cdf = restricted_cdf(mu, r)?;
    let mass = 1.0 - 2.0 * mu.upper_mass(r)?;
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Ok(qs
        .iter()
        .map(|&q| {
            let (mut lo, mut hi) = (-r, r);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < q { lo = mid } else { hi = mid }
            }
            let exact = 0.5 * (lo + hi);
            let k = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
            let empirical = s[k];
            let std_error = (q * (1.0 - q) / n as f64).sqrt() / (mu.line_density(exact) / mass);
            QuantileRow { q, empirical, exact, std_error, within_3se: (empirical - exact).abs() <= 3.0 * std_error }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub p: f64,
    pub f_norm: f64,
    /// sqrt(p - 1) ||omega||_p
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    pub exact: f64,
    pub bound: f64,
    pub regime: u8,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub moments: Vec<MomentRow>,
    /// p with ||omega||_p = inf, excluded from the moment comparison
    pub divergent_p: Vec<f64>,
    /// C = ||omega||_p at the largest admissible p
    pub c: f64,
    pub p: f64,
    pub tail: Vec<TailRow>,
}

/// Three-regime bound 2e^{-t^2/(2C^2 e)}, 2e^{-t/(Ce)}, 2(Cp/t)^p; returns (bound, regime).
pub fn three_regime_bound(t: f64, c: f64, p: f64) -> (f64, u8) {
    let e = std::f64::consts::E;
    if t <= c * (e * p).sqrt() {
        (2.0 * (-t * t / (2.0 * c * c * e)).exp(), 1)
    } else if t <= c * e * p {
        (2.0 * (-t / (c * e)).exp(), 2)
    } else {
        (2.0 * (c * p / t).powf(p), 3)
    }
}

/// Admissible p in 2..=p_max: those with a finite moment mu(omega^p).
pub fn admissible_p(mu: &Measure, weight: &Weight, p_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for p in 2..=p_max {
        match weight_moment(weight, p as f64, mu) {
            Moment::Finite(_) => ok.push(p as f64),
            Moment::Divergent => bad.push(p as f64),
        }
    }
    (ok, bad)
}

/// mu({|f - mu(f)| >= t}) for 1-d mu, from the crossings of |f - m| = t located on a fine grid
/// and refined by bisection; interval masses come from the half-line masses of mu.
fn level_set_mass(mu: &Measure, g: &dyn Fn(f64) -> f64, t: f64, r: f64) -> Result<f64> {
    let n = 20_000;
    let h = 2.0 * r / n as f64;
    let above = |x: f64| g(x).abs() >= t;
    let mut mass = 0.0;
    let mut start: Option<f64> = if above(-r) { Some(f64::NEG_INFINITY) } else { None };
    let crossing = |mut a: f64, mut b: f64| {
        let sa = above(a);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if above(m) == sa { a = m } else { b = m }
        }
        0.5 * (a + b)
    };
    let upper = |x: f64| -> Result<f64> { if x == f64::NEG_INFINITY { Ok(1.0) } else { mu.upper_mass(x) } };
    for i in 0..n {
        let (a, b) = (-r + h * i as f64, -r + h * (i + 1) as f64);
        if above(a) != above(b) {
            let c = crossing(a, b);
            match start.take() {
                Some(s) => mass += upper(s)? - upper(c)?,
                None => start = Some(c),
            }
        }
    }
    if let Some(s) = start {
        // the set extends past r; f is taken to stay above the level beyond the grid
        mass += upper(s)?;
    }
    Ok(mass.clamp(0.0, 1.0))
}

/// Moment inequality ||f||_p <= sqrt(p-1) ||omega||_p and the three-regime tail bound for the
/// centred version of a 1-Lipschitz f, with omega normalised so that Ent(f^2) <= 2 int |f'|^2 omega.
pub fn tail_check(mu: &Measure, weight: &Weight, f: &TestFunction, p_max: usize) -> Result<TailReport> {
    // positive and negative parts separately: the signed integral may vanish, which a relative
    // tolerance cannot resolve
    let m = mu.expectation(|x| f.value(x).max(0.0))? - mu.expectation(|x| (-f.value(x)).max(0.0))?;
    let g = |x: f64| f.value(x) - m;
    let (ok, divergent_p) = admissible_p(mu, weight, p_max);
    let mut moments = Vec::new();
    for &p in &ok {
        let f_norm = mu.expectation(|x| g(x).abs().powf(p))?.powf(1.0 / p);
        let w_norm = weight_moment(weight, p, mu).finite().unwrap_or(f64::INFINITY).powf(1.0 / p);
        let bound = (p - 1.0).sqrt() * w_norm;
        moments.push(MomentRow { p, f_norm, bound, holds: f_norm <= bound });
    }
    let p = ok.last().copied().ok_or_else(|| Error::Divergent("no finite moment of omega for p >= 2".into()))?;
    let c = weight_moment(weight, p, mu).finite().unwrap_or(f64::INFINITY).powf(1.0 / p);
    let e = std::f64::consts::E;
    // 50 points up to twice the start of the polynomial regime
    let t_max = 2.0 * c * e * p;
    let r = mu.radius_for_tail(1e-12)?.max(t_max + m.abs() + 1.0);
    let mut tail = Vec::with_capacity(50);
    for i in 0..50 {
        let t = t_max * i as f64 / 49.0;
        let exact = if t == 0.0 { 1.0 } else { level_set_mass(mu, &g, t, r)? };
        let (bound, regime) = three_regime_bound(t, c, p);
        tail.push(TailRow { t, exact, bound, regime, holds: exact <= bound });
    }
    Ok(TailReport { moments, divergent_p, c, p, tail })
}

/// |f'| sqrt(omega) <= 1 on the points given; the first violation is returned as a witness.
pub fn check_lipschitz_omega(f: &TestFunction, weight: &Weight, points: &[f64]) -> Result<()> {
    for &x in points {
        let v = f.d1(x).abs() * weight.value(x).sqrt();
        if v > 1.0 + 1e-12 {
            return Err(Error::LipschitzViolation(format!("|f'| sqrt(omega) = {v} at x = {x}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub r: f64,
    pub empirical: f64,
    pub std_error: f64,
    /// e^{-r^2/4}
    pub bound: f64,
    pub pass: bool,
}

/// Empirical P(time average >= r) from per-replica time averages against e^{-r^2/4}.
pub fn additive_functional_deviation(averages: &[f64], r_grid: &[f64]) -> Vec<DeviationRow> {
    let n = averages.len() as f64;
    r_grid
        .iter()
        .map(|&r| {
            let empirical = averages.iter().filter(|&&a| a >= r).count() as f64 / n;
            let std_error = (empirical * (1.0 - empirical) / n).sqrt().max(1.0 / n);
            let bound = (-r * r / 4.0).exp();
            DeviationRow { r, empirical, std_error, bound, pass: empirical <= bound + 3.0 * std_error }
        })
        .collect()
}
