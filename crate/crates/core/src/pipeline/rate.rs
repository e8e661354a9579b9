//! Tabulated non-increasing rate functions s -> beta(s), stored as ln beta.

use serde::{Deserialize, Serialize};

/// ln beta(s) ~ a / s + b ln(1/s) + c, used below the smallest tabulated s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TailModel {
    pub fn ln_beta(&self, s: f64) -> f64 {
        self.a / s - self.b * s.ln() + self.c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    /// increasing abscissae
    pub s: Vec<f64>,
    /// ln beta(s); +inf where beta is not available
    pub ln_beta: Vec<f64>,
    pub closed_form: Option<String>,
    pub tail: Option<TailModel>,
}

/// `count` log-spaced points in [lo, hi].
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Default tabulation: 200 log-spaced points in [1e-4, 1e2].
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-4, 1e2, 200)
}

impl RateFunction {
    pub fn from_ln_fn(s: Vec<f64>, ln_beta: impl Fn(f64) -> f64, closed_form: Option<String>) -> Self {
        let ln_beta = s.iter().map(|&x| ln_beta(x)).collect();
        RateFunction { s, ln_beta, closed_form, tail: None }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Replace ln beta by its running maximum from the right (smallest non-increasing majorant).
    pub fn enforce_monotone(&mut self) {
        for i in (0..self.ln_beta.len().saturating_sub(1)).rev() {
            if self.ln_beta[i] < self.ln_beta[i + 1] {
                self.ln_beta[i] = self.ln_beta[i + 1];
            }
        }
    }

    pub fn is_non_increasing(&self) -> bool {
        self.ln_beta.windows(2).all(|w| w[1] <= w[0] || (w[0].is_infinite() && w[1].is_infinite()))
    }

    /// Fit the tail model as an upper envelope of the `window` smallest-s finite samples.
    pub fn fit_tail(&mut self, window: usize) {
        let pts: Vec<(f64, f64)> = self
            .s
            .iter()
            .zip(&self.ln_beta)
            .filter(|(_, l)| l.is_finite())
            .take(window)
            .map(|(&s, &l)| (s, l))
            .collect();
        if pts.len() < 4 {
            self.tail = None;
            return;
        }
        let basis = |s: f64| [1.0 / s, -s.ln(), 1.0];
        let mut coef = least_squares3(&pts, basis);
        if coef[0] < 0.0 {
            // no exponential part: fit b ln(1/s) + c only
            coef = least_squares3(&pts, |s| [0.0, -s.ln(), 1.0]);
            coef[0] = 0.0;
        }
        let model = TailModel { a: coef[0], b: coef[1].max(0.0), c: coef[2] };
        let lift = pts.iter().map(|&(s, l)| l - model.ln_beta(s)).fold(0.0f64, f64::max);
        self.tail = Some(TailModel { c: model.c + lift, ..model });
    }

    /// Smallest tabulated s with a finite value.
    pub fn first_finite(&self) -> Option<usize> {
        self.ln_beta.iter().position(|l| l.is_finite())
    }

    /// Upper bound for ln beta(s): the sample at the largest tabulated s' <= s, the tail model
    /// below the finite range, +inf when neither is available.
    pub fn ln_beta_at(&self, s: f64) -> f64 {
        let first = self.first_finite();
        let idx = self.s.partition_point(|&x| x <= s);
        if idx == 0 || first.is_none_or(|f| idx - 1 < f) {
            return match self.tail {
                Some(t) => t.ln_beta(s),
                None => f64::INFINITY,
            };
        }
        self.ln_beta[idx - 1]
    }

    pub fn beta(&self, s: f64) -> f64 {
        self.ln_beta_at(s).exp()
    }

    /// inf { s : beta(s) <= t } over the tabulation.
    pub fn right_inverse(&self, t: f64) -> Option<f64> {
        let lt = t.ln();
        self.s.iter().zip(&self.ln_beta).find(|(_, &l)| l <= lt).map(|(&s, _)| s)
    }

    /// The same inequality expressed in the variable s' = factor * s:
    /// beta'(s') = beta(s' / factor).
    pub fn rescale_time(&self, factor: f64) -> RateFunction {
        RateFunction {
            s: self.s.iter().map(|s| s * factor).collect(),
            ln_beta: self.ln_beta.clone(),
            closed_form: self.closed_form.clone(),
            tail: self.tail.map(|t| TailModel { a: t.a * factor, b: t.b, c: t.c - t.b * factor.ln() }),
        }
    }
}

fn least_squares3(pts: &[(f64, f64)], basis: impl Fn(f64) -> [f64; 3]) -> [f64; 3] {
    let mut a = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for &(s, y) in pts {
        let phi = basis(s);
        for i in 0..3 {
            rhs[i] += phi[i] * y;
            for j in 0..3 {
                a[i][j] += phi[i] * phi[j];
            }
        }
    }
    // Columns that vanish identically are pinned to zero.
    for i in 0..3 {
        if a[i][i] == 0.0 {
            a[i][i] = 1.0;
        }
    }
    solve3(a, rhs)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for k in 0..3 {
        let p = (k..3).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..3 {
            let f = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..3).rev() {
        let mut s = b[k];
        for j in k + 1..3 {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    x
}
