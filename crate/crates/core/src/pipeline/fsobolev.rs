//! Equivalence between super weighted Poincare inequalities and defective weighted
//! F-Sobolev inequalities, and Rothaus tightening of the logarithmic case.

use serde::{Deserialize, Serialize};

use super::rate::{default_grid, RateFunction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FKind {
    /// F(r) = ln r
    Log,
    /// F tabulated on a ln r grid (non-decreasing, lower lookup)
    Tabulated,
}

/// mu(f^2 F(f^2)) <= c1 int Gamma(f) omega dmu + c2 whenever mu(f^2) = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FSobolevResult {
    pub kind: FKind,
    pub ln_r: Vec<f64>,
    pub f: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub tight: bool,
    /// xi(t) = sup_r (1/r)(1 - beta(r)/t) tabulated on a ln t grid
    pub xi_ln_t: Vec<f64>,
    pub xi: Vec<f64>,
}

/// ln r grid: step 0.05 on [-10, 30], then geometric (ratio 1.02) up to 1e8.
fn ln_r_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..=800).map(|i| -10.0 + 0.05 * i as f64).collect();
    let mut l = 30.0;
    while l < 1e8 {
        l *= 1.02;
        g.push(l);
    }
    g
}

/// Index of the largest grid value <= x.
fn lower_index(grid: &[f64], x: f64) -> Option<usize> {
    let i = grid.partition_point(|&g| g <= x);
    if i == 0 { None } else { Some(i - 1) }
}

impl FSobolevResult {
    /// F = log with the given constants (tabulated on the standard grid for reporting).
    pub fn log(c1: f64, c2: f64) -> Self {
        let ln_r = ln_r_grid();
        let f = ln_r.clone();
        FSobolevResult {
            kind: FKind::Log,
            ln_r,
            f,
            c1,
            c2,
            epsilon: f64::NAN,
            delta: f64::NAN,
            tight: c2 == 0.0,
            xi_ln_t: Vec::new(),
            xi: Vec::new(),
        }
    }

    /// Lower bound for F(e^{ln_r}).
    pub fn f_at(&self, ln_r: f64) -> f64 {
        match self.kind {
            FKind::Log => ln_r,
            FKind::Tabulated => match lower_index(&self.ln_r, ln_r) {
                Some(i) => self.f[i],
                None => 0.0,
            },
        }
    }

    /// Upper bound for ln F^{-1}(t), F^{-1}(t) = inf { r >= 0 : F(r) >= t }.
    pub fn ln_f_inverse(&self, t: f64) -> Option<f64> {
        match self.kind {
            FKind::Log => Some(t),
            FKind::Tabulated => self.f.iter().position(|&v| v >= t).map(|i| self.ln_r[i]),
        }
    }

    /// sup_x x (F_+(x) - F(x)): the increase of c2 when F is replaced by its positive part.
    pub fn positive_part_shift(&self) -> f64 {
        match self.kind {
            FKind::Log => (-1.0f64).exp(),
            FKind::Tabulated => self
                .ln_r
                .iter()
                .zip(&self.f)
                .map(|(&l, &v)| if v < 0.0 { -v * l.exp() } else { 0.0 })
                .fold(0.0, f64::max),
        }
    }

    /// Structural checks: F non-decreasing and unbounded on the grid, r F(r) bounded on (0, 1).
    pub fn check_invariants(&self) -> bool {
        let monotone = self.f.windows(2).all(|w| w[1] >= w[0]);
        let grows = self.f.last().copied().unwrap_or(0.0) > self.f[self.f.len() / 2] + 1.0;
        let small = self
            .ln_r
            .iter()
            .zip(&self.f)
            .filter(|(&l, _)| l < 0.0)
            .map(|(&l, &v)| (l.exp() * v).abs())
            .fold(0.0, f64::max);
        let at_one = if self.tight { self.f_at(0.0).abs() < 1e-12 } else { true };
        monotone && grows && small.is_finite() && at_one
    }
}

/// xi(t) = sup_{r>0} (1/r)(1 - beta(r)/t) from a tabulated rate: the sup over a step-function
/// upper bound of beta is attained at the tabulated points or inside the tail-model range,
/// where it is refined by golden-section search on ln r.
fn xi_of(rate: &RateFunction, tail: &TailRange, ln_t: f64) -> f64 {
    let mut best = 0.0f64;
    let term = |r: f64, lb: f64| (1.0 - (lb - ln_t).exp()) / r;
    for (&r, &lb) in rate.s.iter().zip(&rate.ln_beta) {
        if lb.is_finite() {
            best = best.max(term(r, lb));
        }
    }
    if let Some(model) = tail.model {
        let g = |lr: f64| {
            let r = lr.exp();
            term(r, model.ln_beta(r))
        };
        let n = tail.ln_r.len();
        let (mut k, mut kv) = (0, f64::NEG_INFINITY);
        for (i, &lr) in tail.ln_r.iter().enumerate() {
            let v = g(lr);
            if v > kv {
                k = i;
                kv = v;
            }
        }
        best = best.max(kv);
        let (mut a, mut b) = (tail.ln_r[k.saturating_sub(1)], tail.ln_r[(k + 1).min(n - 1)]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let (x1, x2) = (b - phi * (b - a), a + phi * (b - a));
            if g(x1) > g(x2) { b = x2 } else { a = x1 }
        }
        best = best.max(g(0.5 * (a + b)));
    }
    best
}

struct TailRange {
    model: Option<super::rate::TailModel>,
    ln_r: Vec<f64>,
}

/// Defective weighted F-Sobolev inequality from the super weighted Poincare inequality
/// mu(f^2) <= s int Gamma omega + beta(s) mu(|f|)^2 (coefficient s, not 2s).
/// Requires 0 < epsilon <= delta^{-2}, delta > 1.
pub fn swpi_to_fsobolev(beta: &RateFunction, epsilon: f64, delta: f64) -> Result<FSobolevResult> {
    if !(delta > 1.0) || !(epsilon > 0.0 && epsilon <= delta.powi(-2) * (1.0 + 1e-12)) {
        return Err(Error::ParameterOutOfRange(format!(
            "need delta > 1 and 0 < epsilon <= delta^-2, got delta = {delta}, epsilon = {epsilon}"
        )));
    }
    let first = beta.first_finite().ok_or_else(|| Error::DegenerateRate("rate is infinite everywhere".into()))?;
    let s0 = beta.s[first];
    let tail_r = TailRange {
        model: beta.tail,
        ln_r: super::rate::log_grid(1e-12, s0, 600).iter().map(|r| r.ln()).filter(|&l| l < s0.ln()).collect(),
    };

    // xi on a ln t grid: step 0.02 on [-62, 32], geometric ratio 1.01 beyond.
    let mut xi_ln_t: Vec<f64> = (0..=4700).map(|i| -62.0 + 0.02 * i as f64).collect();
    let mut l = 32.0;
    while l < 1.1e8 {
        l *= 1.01;
        xi_ln_t.push(l);
    }
    let xi: Vec<f64> = xi_ln_t.iter().map(|&lt| xi_of(beta, &tail_r, lt)).collect();
    if xi.iter().all(|&v| v <= 0.0) {
        return Err(Error::DegenerateRate("xi <= 0 on the whole tabulation".into()));
    }
    let xi_lower = |lt: f64| lower_index(&xi_ln_t, lt).map_or(0.0, |i| xi[i]);

    // F(r) = (1/r) int_0^r xi(eps t) dt = int_0^inf xi(eps r e^{-y}) e^{-y} dy, lower Riemann sum
    let ln_eps = epsilon.ln();
    let dy = 0.02;
    let ln_r = ln_r_grid();
    let f: Vec<f64> = ln_r
        .iter()
        .map(|&lr| {
            let mut acc = 0.0;
            for j in 0..2500 {
                let (y0, y1) = (dy * j as f64, dy * (j + 1) as f64);
                let v = xi_lower(ln_eps + lr - y1);
                if v > 0.0 {
                    acc += v * ((-y0).exp() - (-y1).exp());
                }
            }
            acc
        })
        .collect();

    let c_delta = (delta.sqrt() - 1.0).powi(2) / (1.0 - 1.0 / delta);
    let c1 = delta * delta / c_delta;
    // c2 = delta^2 int_0^{1/delta} xi, upper Riemann sum (xi non-decreasing)
    let n = 2000;
    let h = 1.0 / (delta * n as f64);
    let c2 = delta * delta * (1..=n).map(|k| xi_of(beta, &tail_r, (h * k as f64).ln()) * h).sum::<f64>();
    Ok(FSobolevResult {
        kind: FKind::Tabulated,
        ln_r,
        f,
        c1,
        c2,
        epsilon,
        delta,
        tight: false,
        xi_ln_t,
        xi,
    })
}

/// beta(s) = t^2 F^{-1}(t) / (t - C2)^2 at t = C2 + 2 C1 / s, with F replaced by F_+.
pub fn fsobolev_to_swpi(fsob: &FSobolevResult, s_grid: &[f64]) -> RateFunction {
    let c2 = fsob.c2 + fsob.positive_part_shift();
    let ln_beta = s_grid
        .iter()
        .map(|&s| {
            let t = c2 + 2.0 * fsob.c1 / s;
            match fsob.ln_f_inverse(t) {
                Some(lf) => 2.0 * t.ln() + lf.max(0.0) - 2.0 * (t - c2).ln(),
                None => f64::INFINITY,
            }
        })
        .collect();
    let mut out = RateFunction { s: s_grid.to_vec(), ln_beta, closed_form: None, tail: None };
    out.enforce_monotone();
    out
}

/// fsobolev_to_swpi on the default tabulation.
pub fn fsobolev_to_swpi_default(fsob: &FSobolevResult) -> RateFunction {
    fsobolev_to_swpi(fsob, &default_grid())
}

/// Tight weighted LSI Ent(f^2) <= c_tight int Gamma(f) omega dmu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightLsi {
    pub c_tight: f64,
    /// F >= kappa ln - kappa_prime on (0, inf)
    pub kappa: f64,
    pub kappa_prime: f64,
    /// defective log-Sobolev constants: Ent(f^2) <= c1_log int Gamma omega + c2_log mu(f^2)
    pub c1_log: f64,
    pub c2_log: f64,
    pub poincare: f64,
}

/// kappa' = sup_r (kappa ln r - F(r))_+, bounded on each grid cell by monotonicity of F.
fn kappa_prime(fsob: &FSobolevResult, kappa: f64) -> f64 {
    let mut best = (kappa * fsob.ln_r[0]).max(0.0);
    for i in 0..fsob.ln_r.len() - 1 {
        best = best.max(kappa * fsob.ln_r[i + 1] - fsob.f[i]);
    }
    best
}

/// Rothaus tightening Ent(f^2) <= Ent((f - mu f)^2) + 2 Var(f) of the log case:
/// c_tight = c1_log + (c2_log + 2) C_P. A tabulated F is first bounded below by kappa ln - kappa',
/// with kappa chosen to minimise c_tight.
pub fn tighten(fsob: &FSobolevResult, poincare: f64) -> Result<TightLsi> {
    if !(poincare.is_finite() && poincare > 0.0) {
        return Err(Error::NoTightening(format!("weighted Poincare constant {poincare}")));
    }
    match fsob.kind {
        FKind::Log => Ok(TightLsi {
            c_tight: fsob.c1 + (fsob.c2 + 2.0) * poincare,
            kappa: 1.0,
            kappa_prime: 0.0,
            c1_log: fsob.c1,
            c2_log: fsob.c2,
            poincare,
        }),
        FKind::Tabulated => {
            let n = fsob.ln_r.len();
            let (l_end, f_end) = (fsob.ln_r[n - 1], fsob.f[n - 1]);
            let m = fsob.ln_r.partition_point(|&l| l < 0.5 * l_end);
            let slope = (f_end - fsob.f[m]) / (l_end - fsob.ln_r[m]);
            // a log lower bound needs F to keep growing linearly in ln r
            let early = fsob.ln_r.partition_point(|&l| l < 0.05 * l_end);
            let early_slope = (fsob.f[m] - fsob.f[early]) / (fsob.ln_r[m] - fsob.ln_r[early]);
            if !(slope > 0.0) || slope > 10.0 * early_slope.max(1e-300) {
                return Err(Error::UnsupportedF("F is not bounded below by a multiple of log".into()));
            }
            let mut best: Option<TightLsi> = None;
            for j in 1..=400 {
                let kappa = slope * j as f64 / 400.0;
                let kp = kappa_prime(fsob, kappa);
                let c1_log = fsob.c1 / kappa;
                let c2_log = (fsob.c2 + kp) / kappa;
                let c_tight = c1_log + (c2_log + 2.0) * poincare;
                if best.is_none_or(|b| c_tight < b.c_tight) {
                    best = Some(TightLsi { c_tight, kappa, kappa_prime: kp, c1_log, c2_log, poincare });
                }
            }
            Ok(best.unwrap())
        }
    }
}

/// Time-rescaling factors lambda(s) = s / s*, where s* = inf { sigma : beta(sigma) <= beta'(s) }
/// for a closed-form beta and a derived rate beta'. Returns (min, max) over the finite samples
/// with beta(s) >= e (beta' stays above a constant while beta tends to 1, so large s are skipped).
pub fn rescale_factor_range(beta_ln: impl Fn(f64) -> f64, derived: &RateFunction) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (&s, &lb) in derived.s.iter().zip(&derived.ln_beta) {
        if !lb.is_finite() || beta_ln(s) < 1.0 {
            continue;
        }
        // beta non-increasing: bisection on ln sigma
        let (mut a, mut b) = (-60.0f64, 60.0f64);
        if beta_ln(b.exp()) > lb {
            continue;
        }
        if beta_ln(a.exp()) <= lb {
            lo = lo.min(s / a.exp());
            hi = hi.max(s / a.exp());
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if beta_ln(mid.exp()) <= lb { b = mid } else { a = mid }
        }
        let lam = s / b.exp();
        lo = lo.min(lam);
        hi = hi.max(lam);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::rate::log_grid;

    fn synthetic(f: fn(f64) -> f64) -> RateFunction {
        let mut r = RateFunction::from_ln_fn(default_grid(), f, None);
        r.fit_tail(40);
        r
    }

    #[test]
    fn exponential_rate_gives_log_growth() {
        let b = synthetic(|s| 1.0 / s);
        let fs = swpi_to_fsobolev(&b, 0.25, 2.0).unwrap();
        assert!(fs.check_invariants());
        // F(r) ~ ln(eps r) for beta = e^{1/s}
        let slope = (fs.f_at(1e7) - fs.f_at(1e6)) / (1e7 - 1e6);
        assert!((slope - 1.0).abs() < 0.02, "{slope}");
        let lsi = tighten(&fs, 3.0).unwrap();
        assert!(lsi.kappa > 0.0 && lsi.kappa <= 1.0 + 1e-12);
        assert!(lsi.c_tight >= fs.c1 + 6.0 && lsi.c_tight.is_finite());
    }

    #[test]
    fn log_to_swpi_substitution() {
        let fs = FSobolevResult::log(1.5, 0.0);
        let c2 = (-1.0f64).exp();
        let s = [0.01, 0.5, 3.0];
        let r = fsobolev_to_swpi(&fs, &s);
        for (i, &si) in s.iter().enumerate() {
            let t: f64 = c2 + 3.0 / si;
            let exact = t * t * t.exp() / ((t - c2) * (t - c2));
            assert!((r.ln_beta[i] - exact.ln()).abs() < 1e-12);
        }
        assert!(r.is_non_increasing());
    }

    #[test]
    fn tighten_log_is_rothaus() {
        let lsi = tighten(&FSobolevResult::log(3.0, 0.0), 5.0).unwrap();
        assert_eq!(lsi.c_tight, 3.0 + 2.0 * 5.0);
    }

    #[test]
    fn power_f_is_not_tightened() {
        let b = synthetic(|s| (1.0 + s.powi(-2)).ln());
        let fs = swpi_to_fsobolev(&b, 0.25, 2.0).unwrap();
        assert!(matches!(tighten(&fs, 1.0), Err(Error::UnsupportedF(_))));
    }

    #[test]
    fn huge_constant_rate_is_degenerate() {
        let b = RateFunction::from_ln_fn(log_grid(1.0, 2.0, 5), |_| f64::INFINITY, None);
        assert!(matches!(swpi_to_fsobolev(&b, 0.25, 2.0), Err(Error::DegenerateRate(_))));
    }

    #[test]
    fn round_trip_rescaling_is_bounded() {
        let cases: [fn(f64) -> f64; 3] =
            [|s| 1.0 / s, |s| -0.5 * s.ln() + 2.0 / s, |s| (1.0 + s.powi(-2)).ln()];
        for f in cases {
            let b = synthetic(f);
            let fs = swpi_to_fsobolev(&b, 0.25, 2.0).unwrap();
            let back = fsobolev_to_swpi_default(&fs);
            assert!(back.is_non_increasing());
            let (lo, hi) = rescale_factor_range(f, &back);
            // beta' >= beta, and a single time rescaling covers the whole overlap
            assert!(lo >= 1.0 - 1e-9 && hi.is_finite() && hi / lo < 2.0, "{lo} {hi}");
        }
    }
}
