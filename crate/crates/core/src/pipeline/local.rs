//! Local super-Poincare inequality on balls:
//! int_{B_r} f^2 dmu <= s int |grad f|^2 dmu + beta_loc(r, s) (int_{B_r} |f| dmu)^2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::measure::{log_add, sphere_area, Measure};
use crate::quadrature::gauss_legendre;

/// s-values at which the Lebesgue constant on the unit ball is calibrated.
pub const CALIBRATION_S: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Integrals of f^2, |f'|^2 and |f| over the unit ball for a radial (or, in 1-d, arbitrary)
/// piecewise-linear profile with knots `xs` and values `ys`.
fn pl_integrals(xs: &[f64], ys: &[f64], dim: usize, gl: &(Vec<f64>, Vec<f64>)) -> (f64, f64, f64) {
    let area = if dim == 1 { 1.0 } else { sphere_area(dim) };
    let (mut i2, mut d2, mut i1) = (0.0, 0.0, 0.0);
    for k in 0..xs.len() - 1 {
        let (a, b) = (xs[k], xs[k + 1]);
        let (fa, fb) = (ys[k], ys[k + 1]);
        let slope = (fb - fa) / (b - a);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in gl.0.iter().zip(&gl.1) {
            let r = c + h * x;
            let jac = if dim == 1 { 1.0 } else { r.powi(dim as i32 - 1) };
            let f = fa + slope * (r - a);
            i2 += w * h * jac * f * f;
            d2 += w * h * jac * slope * slope;
            i1 += w * h * jac * f.abs();
        }
    }
    (area * i2, area * d2, area * i1)
}

/// Brute-force constant c_n with int_B f^2 <= s int |f'|^2 + c_n (1 + s^{-n/2}) (int_B |f|)^2 on
/// the unit ball, over `samples` random piecewise-linear f plus constants and boundary tents,
/// times a safety factor 2.
pub fn calibrate_cn(dim: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gl = gauss_legendre(8);
    let lo = if dim == 1 { -1.0 } else { 0.0 };
    let mut profiles: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    profiles.push((vec![lo, 1.0], vec![1.0, 1.0]));
    for j in 1..=20 {
        let w = j as f64 / 20.0 * (1.0 - lo);
        profiles.push((vec![lo, 1.0 - w, 1.0], vec![0.0, 0.0, 1.0]));
        if dim == 1 {
            profiles.push((vec![-1.0, -1.0 + w, 1.0], vec![1.0, 0.0, 0.0]));
        }
    }
    for _ in 0..samples {
        let k = rng.random_range(2..=12usize);
        let xs: Vec<f64> = (0..=k).map(|i| lo + (1.0 - lo) * i as f64 / k as f64).collect();
        let ys: Vec<f64> = (0..=k).map(|_| rng.random_range(-1.0..1.0)).collect();
        profiles.push((xs, ys));
    }
    let mut worst: f64 = 0.0;
    for (xs, ys) in &profiles {
        let (i2, d2, i1) = pl_integrals(xs, ys, dim, &gl);
        for &s in &CALIBRATION_S {
            let ratio = (i2 - s * d2) / ((1.0 + s.powf(-(dim as f64) / 2.0)) * i1 * i1);
            worst = worst.max(ratio);
        }
    }
    2.0 * worst
}

/// ln beta_loc(r, s) = ln c_n (max(1, r^{-n}) + (s inf p / sup p)^{-n/2}) sup p / inf^2 p,
/// with the density extrema taken over the ball of radius r.
pub fn ln_beta_loc(mu: &Measure, cn: f64, r: f64, s: f64) -> f64 {
    let n = mu.dim as f64;
    let (vmin, vmax) = mu.potential_range(r);
    let ln_zn = if mu.dim == 1 { mu.log_z } else { mu.log_z + sphere_area(mu.dim).ln() };
    // p = e^{-V}/Z_n: sup p / inf^2 p = Z_n e^{2 vmax - vmin}, inf p / sup p = e^{-(vmax - vmin)}
    let ln_ratio = vmax - vmin;
    let ln_first = (-n * r.ln()).max(0.0);
    let ln_second = -0.5 * n * (s.ln() - ln_ratio);
    cn.ln() + log_add(ln_first, ln_second) + ln_zn + 2.0 * vmax - vmin
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_builtin, MeasureKind};
    use std::f64::consts::PI;

    #[test]
    fn calibrated_constant_bounds_fresh_samples() {
        let cn = calibrate_cn(1, 200, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let gl = gauss_legendre(8);
        for _ in 0..500 {
            let k = rng.random_range(2..=20usize);
            let xs: Vec<f64> = (0..=k).map(|i| -1.0 + 2.0 * i as f64 / k as f64).collect();
            let ys: Vec<f64> = (0..=k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (i2, d2, i1) = pl_integrals(&xs, &ys, 1, &gl);
            for s in [0.003, 0.1, 1.0, 1e3] {
                assert!(i2 <= s * d2 + cn * (1.0 + s.powf(-0.5)) * i1 * i1 + 1e-12);
            }
        }
    }

    #[test]
    fn cauchy_local_constant_matches_closed_form() {
        // c_n (1 + s^{-1/2} (1+r^2)^{beta/2}) (1+r^2)^{2 beta} Z
        let beta = 2.0;
        let mu = make_builtin(MeasureKind::Cauchy { beta }, 1).unwrap();
        for (r, s) in [(1.0f64, 0.1f64), (5.0, 1e-3), (100.0, 2.0)] {
            let q: f64 = 1.0 + r * r;
            let exact = 0.7 * (1.0 + s.powf(-0.5) * q.powf(beta / 2.0)) * q.powf(2.0 * beta) * PI / 2.0;
            let got = ln_beta_loc(&mu, 0.7, r, s);
            assert!((got - exact.ln()).abs() < 1e-10, "r={r} s={s}");
        }
    }

    #[test]
    fn beta_loc_monotone_in_r_and_s() {
        let mu = make_builtin(MeasureKind::Exponential, 1).unwrap();
        assert!(ln_beta_loc(&mu, 1.0, 3.0, 0.1) > ln_beta_loc(&mu, 1.0, 3.0, 1.0));
        assert!(ln_beta_loc(&mu, 1.0, 3.0, 0.1) < ln_beta_loc(&mu, 1.0, 6.0, 0.1));
    }

    #[test]
    fn radial_calibration_is_finite() {
        let c3 = calibrate_cn(3, 200, 7);
        assert!(c3.is_finite() && c3 > 0.0);
    }
}
