//! Finite-volume discretisation of L^omega f = omega f'' + (omega' - omega V') f' on a truncated
//! grid with reflecting ends: spectral gaps, best log-Sobolev ratios and entropy decay.

use serde::{Deserialize, Serialize};

use crate::calculus::{bregman_xlogx, Weight};
use crate::error::{Error, Result};
use crate::measure::Measure;

/// Nodes for the oracle: uniform, or x = scale * sinh(t) with uniform t.
pub fn uniform_nodes(r_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -r_max + 2.0 * r_max * i as f64 / (n - 1) as f64).collect()
}

pub fn sinh_nodes(r_max: f64, n: usize, scale: f64) -> Vec<f64> {
    let t = (r_max / scale).asinh();
    (0..n).map(|i| scale * (-t + 2.0 * t * i as f64 / (n - 1) as f64).sinh()).collect()
}

/// Radial nodes on (0, r_max]; the origin is dropped since the radial density vanishes there.
pub fn half_nodes(nodes: &[f64]) -> Vec<f64> {
    nodes.iter().copied().filter(|&x| x > 0.0).collect()
}

/// mu-symmetric tridiagonal generator: (Lf)_i = (c_{i+1/2}(f_{i+1}-f_i) - c_{i-1/2}(f_i-f_{i-1}))/m_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteOperator {
    pub nodes: Vec<f64>,
    /// discrete probability masses, summing to one
    pub masses: Vec<f64>,
    /// c_{i+1/2}, length n - 1
    pub conductances: Vec<f64>,
    /// normalising factor applied to the raw masses (the mass lost to truncation)
    pub raw_mass: f64,
}

impl DiscreteOperator {
    /// m_i = p_i * (cell width), c_{i+1/2} = omega_{i+1/2} p_{i+1/2} / h_{i+1/2}, midpoint values
    /// by geometric means; the density includes the radial surface factor when dim > 1.
    pub fn build(mu: &Measure, weight: &Weight, nodes: &[f64]) -> Self {
        let n = nodes.len();
        let lp: Vec<f64> = nodes.iter().map(|&x| mu.ln_line_density(x)).collect();
        let lw: Vec<f64> = nodes.iter().map(|&x| weight.value(x).ln()).collect();
        let mut masses = vec![0.0; n];
        for i in 0..n {
            let left = if i == 0 { nodes[0] } else { 0.5 * (nodes[i - 1] + nodes[i]) };
            let right = if i == n - 1 { nodes[n - 1] } else { 0.5 * (nodes[i] + nodes[i + 1]) };
            masses[i] = lp[i].exp() * (right - left);
        }
        let mut conductances = vec![0.0; n - 1];
        for i in 0..n - 1 {
            let h = nodes[i + 1] - nodes[i];
            conductances[i] = (0.5 * (lp[i] + lp[i + 1] + lw[i] + lw[i + 1])).exp() / h;
        }
        let total: f64 = masses.iter().sum();
        for m in masses.iter_mut() {
            *m /= total;
        }
        for c in conductances.iter_mut() {
            *c /= total;
        }
        DiscreteOperator { nodes: nodes.to_vec(), masses, conductances, raw_mass: total }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut flux = 0.0;
            if i + 1 < n {
                flux += self.conductances[i] * (f[i + 1] - f[i]);
            }
            if i > 0 {
                flux -= self.conductances[i - 1] * (f[i] - f[i - 1]);
            }
            out[i] = flux / self.masses[i];
        }
        out
    }

    /// sum c_{i+1/2} (f_{i+1} - f_i)^2
    pub fn dirichlet(&self, f: &[f64]) -> f64 {
        self.conductances.iter().enumerate().map(|(i, c)| c * (f[i + 1] - f[i]).powi(2)).sum()
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.masses).map(|(a, m)| a * m).sum()
    }

    /// Ent_m(f^2)
    pub fn entropy_sq(&self, f: &[f64]) -> f64 {
        let sq: Vec<f64> = f.iter().map(|a| a * a).collect();
        self.entropy(&sq)
    }

    /// Ent_m(u) for u >= 0, as mean(u) sum m (g ln g - g + 1) with g = u / mean(u).
    pub fn entropy(&self, u: &[f64]) -> f64 {
        let s = self.mean(u) / self.masses.iter().sum::<f64>();
        if s <= 0.0 {
            return 0.0;
        }
        s * u.iter().zip(&self.masses).map(|(a, m)| m * bregman_xlogx(a / s)).sum::<f64>()
    }

    /// Symmetrised matrix M^{-1/2} K M^{-1/2}: diagonal and off-diagonal.
    fn symmetric(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n - 1];
        for i in 0..n - 1 {
            let c = self.conductances[i];
            d[i] += c / self.masses[i];
            d[i + 1] += c / self.masses[i + 1];
            e[i] = -c / (self.masses[i] * self.masses[i + 1]).sqrt();
        }
        (d, e)
    }

    /// Number of eigenvalues of -L strictly below x (Sturm sequence of the LDL^T pivots).
    fn count_below(d: &[f64], e: &[f64], x: f64) -> usize {
        let mut count = 0;
        let mut q = d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..d.len() {
            let denom = if q == 0.0 { f64::EPSILON * (d[i - 1].abs() + e[i - 1].abs()) } else { q };
            q = d[i] - x - e[i - 1] * e[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// k-th smallest eigenvalue of -L (k = 0 is the zero eigenvalue) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (d, e) = self.symmetric();
        let mut hi = 0.0f64;
        for i in 0..d.len() {
            let off = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < d.len() { e[i].abs() } else { 0.0 };
            hi = hi.max(d[i] + off);
        }
        let mut lo = 0.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if Self::count_below(&d, &e, mid) > k { hi = mid } else { lo = mid }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Smallest nonzero eigenvalue of -L in the m-weighted inner product.
    pub fn spectral_gap(&self) -> f64 {
        self.eigenvalue(1)
    }

    /// Eigenfunction for the gap by inverse iteration (m-normalised, m-orthogonal to constants).
    pub fn gap_eigenvector(&self) -> (f64, Vec<f64>) {
        let lambda = self.spectral_gap();
        let (d, e) = self.symmetric();
        let n = self.len();
        let shift = lambda * (1.0 - 1e-10);
        let mut v: Vec<f64> = self.nodes.iter().map(|&x| x.atan() + 1e-3).collect();
        for _ in 0..6 {
            let diag: Vec<f64> = d.iter().map(|x| x - shift).collect();
            v = solve_tridiagonal(&e, &diag, &e, &v);
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
        let mut f: Vec<f64> = (0..n).map(|i| v[i] / self.masses[i].sqrt()).collect();
        let c = self.mean(&f);
        f.iter_mut().for_each(|a| *a -= c);
        let norm = f.iter().zip(&self.masses).map(|(a, m)| a * a * m).sum::<f64>().sqrt();
        f.iter_mut().for_each(|a| *a /= norm);
        (lambda, f)
    }

    /// Largest eigenvalue of -L (stiffness of the explicit time step).
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalue(self.len() - 1)
    }

    /// Solve (K + a M) x = M b.
    fn solve_shifted(&self, a: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for i in 0..n - 1 {
            let c = self.conductances[i];
            diag[i] += c;
            diag[i + 1] += c;
            off[i] = -c;
        }
        for i in 0..n {
            diag[i] += a * self.masses[i];
        }
        let rhs: Vec<f64> = (0..n).map(|i| self.masses[i] * b[i]).collect();
        solve_tridiagonal(&off, &diag, &off, &rhs)
    }

    /// Best ratio Ent_m(f^2) / Dirichlet(f) found by preconditioned gradient ascent from
    /// `restarts` starting profiles. A lower bound for the discrete log-Sobolev constant.
    pub fn lsi_ratio_max(&self, restarts: usize) -> LsiRatio {
        self.lsi_ratio_max_with(restarts, 400, 1.0)
    }

    pub fn lsi_ratio_max_with(&self, restarts: usize, max_iter: usize, tau: f64) -> LsiRatio {
        let starts = self.starting_profiles(restarts.max(1));
        let mut best = LsiRatio { ratio: 0.0, argmax: vec![1.0; self.len()], iterations: 0 };
        for f0 in starts {
            let r = self.ascend(f0, max_iter, tau);
            if r.ratio > best.ratio {
                best = r;
            }
        }
        best
    }

    fn ratio(&self, f: &[f64]) -> f64 {
        let d = self.dirichlet(f);
        if d <= 0.0 { 0.0 } else { self.entropy_sq(f) / d }
    }

    fn starting_profiles(&self, count: usize) -> Vec<Vec<f64>> {
        let n = self.len();
        let x = &self.nodes;
        let scale = x[n - 1].abs().max(x[0].abs());
        let mut out: Vec<Vec<f64>> = Vec::new();
        let (_, v) = self.gap_eigenvector();
        out.push(v.iter().map(|a| 1.0 + 0.1 * a).collect());
        // tail steps at quantiles of the mass, tilts and capacity-type profiles
        let cum: Vec<f64> = self
            .masses
            .iter()
            .scan(0.0, |s, m| {
                *s += m;
                Some(*s)
            })
            .collect();
        let mut k = 0;
        while out.len() < count {
            let level = 10f64.powf(-1.0 - 0.5 * (k / 3) as f64);
            let j = match k % 3 {
                0 => cum.partition_point(|&c| c < 1.0 - level),
                1 => cum.partition_point(|&c| c < level),
                _ => n / 2,
            }
            .min(n - 1);
            let a = x[j];
            let width = (0.05 * a.abs()).max(1e-3 * scale);
            match k % 3 {
                0 => out.push(x.iter().map(|&t| 0.05 + 1.0 / (1.0 + (-(t - a) / width).exp())).collect()),
                1 => out.push(x.iter().map(|&t| 0.05 + 1.0 / (1.0 + ((t - a) / width).exp())).collect()),
                _ => {
                    let theta = 0.5 * (1 + k / 3) as f64;
                    out.push(x.iter().map(|&t| (0.5 * theta * t.clamp(-20.0, 20.0)).exp()).collect())
                }
            }
            k += 1;
        }
        out
    }

    fn ascend(&self, mut f: Vec<f64>, max_iter: usize, tau: f64) -> LsiRatio {
        let n = self.len();
        let mut r = self.ratio(&f);
        let mut step = 1.0;
        let mut it = 0;
        while it < max_iter {
            it += 1;
            let s: f64 = f.iter().zip(&self.masses).map(|(a, m)| a * a * m).sum();
            let d = self.dirichlet(&f);
            // gradient / m of Ent and Dirichlet
            let mut g = vec![0.0; n];
            for i in 0..n {
                let fi = f[i];
                let ge = if fi != 0.0 { 2.0 * fi * (fi * fi / s).ln() } else { 0.0 };
                g[i] = ge;
            }
            let kf = self.apply(&f); // L f = -M^{-1} K f
            for i in 0..n {
                g[i] = (g[i] + r * 2.0 * kf[i]) / d;
            }
            let dir = self.solve_shifted(tau, &g);
            let dn = dir.iter().zip(&self.masses).map(|(a, m)| a * a * m).sum::<f64>().sqrt();
            if !(dn > 0.0) {
                break;
            }
            let fn_ = s.sqrt();
            let mut accepted = false;
            for _ in 0..30 {
                let cand: Vec<f64> = f.iter().zip(&dir).map(|(a, b)| a + step * fn_ * b / dn).collect();
                let rc = self.ratio(&cand);
                if rc > r {
                    let gain = rc - r;
                    f = cand;
                    r = rc;
                    step = (step * 2.0).min(1.0);
                    accepted = true;
                    if gain < 1e-10 * r {
                        it = max_iter;
                    }
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        LsiRatio { ratio: r, argmax: f, iterations: it }
    }

    /// Crank-Nicolson for du/dt = L u with two implicit-Euler half steps first (Rannacher start).
    /// Returns Ent_m(u(t)) at the requested times and the final mass drift.
    pub fn evolve_entropy(&self, f0: &[f64], times: &[f64]) -> Result<EntropySeries> {
        if f0.iter().any(|&a| a < 0.0) || self.mean(f0) <= 0.0 {
            return Err(Error::NegativeInput("initial condition must be >= 0 with positive mass".into()));
        }
        let spacing = times
            .windows(2)
            .map(|w| w[1] - w[0])
            .chain(times.iter().copied().filter(|&t| t > 0.0).take(1))
            .fold(f64::INFINITY, f64::min);
        let dt = spacing / 50.0;
        let mass0 = self.mean(f0);
        let mut u = f0.to_vec();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        let mut min_value = f64::INFINITY;
        let mut started = false;
        for &target in times {
            while t < target - 1e-12 * target.max(1.0) {
                let h = dt.min(target - t);
                if !started {
                    // Rannacher start: two implicit Euler half steps damp the stiff modes
                    for _ in 0..2 {
                        u = self.solve_shifted(2.0 / h, &u).iter().map(|a| a * 2.0 / h).collect();
                    }
                    started = true;
                } else {
                    let lu = self.apply(&u);
                    let rhs: Vec<f64> = u.iter().zip(&lu).map(|(a, b)| a + 0.5 * h * b).collect();
                    u = self.solve_shifted(2.0 / h, &rhs).iter().map(|a| a * 2.0 / h).collect();
                }
                min_value = min_value.min(u.iter().copied().fold(f64::INFINITY, f64::min));
                t += h;
            }
            out.push((target, self.entropy(&u.iter().map(|a| a.max(0.0)).collect::<Vec<_>>())));
        }
        Ok(EntropySeries { points: out, mass_drift: (self.mean(&u) - mass0).abs(), min_value, dt })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsiRatio {
    pub ratio: f64,
    pub argmax: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub points: Vec<(f64, f64)>,
    pub mass_drift: f64,
    pub min_value: f64,
    pub dt: f64,
}

impl EntropySeries {
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1 + tol * w[0].1.abs().max(1e-300))
    }

    /// Least-squares slope of -ln Ent(t) over the points with Ent above `floor`.
    pub fn fitted_rate(&self, floor: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self.points.iter().filter(|p| p.1 > floor).map(|&(t, e)| (t, e.ln())).collect();
        let n = pts.len() as f64;
        if pts.len() < 2 {
            return f64::NAN;
        }
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let me = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - me)).sum();
        let var: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        -cov / var
    }
}

/// Thomas algorithm for a tridiagonal system with sub-, main and super-diagonals.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / m;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_builtin, MeasureKind};

    fn gaussian_op(n: usize) -> DiscreteOperator {
        let mu = make_builtin(MeasureKind::Gaussian, 1).unwrap();
        DiscreteOperator::build(&mu, &Weight::constant(1.0), &uniform_nodes(8.0, n))
    }

    #[test]
    fn rows_sum_to_zero_and_detailed_balance() {
        let op = gaussian_op(400);
        let ones = vec![1.0; op.len()];
        assert!(op.apply(&ones).iter().all(|v| v.abs() < 1e-12));
        // m_i L_{i,i+1} = c_{i+1/2} = m_{i+1} L_{i+1,i}
        let e0: Vec<f64> = (0..op.len()).map(|i| if i == 10 { 1.0 } else { 0.0 }).collect();
        let e1: Vec<f64> = (0..op.len()).map(|i| if i == 11 { 1.0 } else { 0.0 }).collect();
        let a = op.masses[10] * op.apply(&e1)[10];
        let b = op.masses[11] * op.apply(&e0)[11];
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn ornstein_uhlenbeck_on_identity() {
        let op = gaussian_op(4001);
        let x = op.nodes.clone();
        let lx = op.apply(&x);
        for i in [1000, 2000, 3000] {
            assert!((lx[i] + x[i]).abs() < 1e-4, "{} {}", lx[i], x[i]);
        }
    }

    #[test]
    fn gaussian_gap_is_one() {
        let op = gaussian_op(4001);
        let gap = op.spectral_gap();
        assert!((gap - 1.0).abs() < 1e-3, "{gap}");
        let (_, v) = op.gap_eigenvector();
        assert!(op.mean(&v).abs() < 1e-10);
        // Rayleigh quotient of the eigenvector
        let rq = op.dirichlet(&v) / v.iter().zip(&op.masses).map(|(a, m)| a * a * m).sum::<f64>();
        assert!((rq - gap).abs() < 1e-6 * gap);
    }

    #[test]
    fn gaussian_lsi_ratio_is_two() {
        let op = gaussian_op(2001);
        let r = op.lsi_ratio_max(6);
        assert!((r.ratio - 2.0).abs() < 0.04, "{}", r.ratio);
    }

    #[test]
    fn entropy_decays_and_mass_is_kept() {
        let op = gaussian_op(801);
        let f0: Vec<f64> = op.nodes.iter().map(|&x| (x - 1.0).exp().min(50.0)).collect();
        let times: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
        let s = op.evolve_entropy(&f0, &times).unwrap();
        assert!(s.is_non_increasing(1e-12));
        assert!(s.mass_drift < 1e-10 * op.mean(&f0));
        assert!(s.min_value > -1e-12);
        let c = vec![1.0; op.len()];
        let s = op.evolve_entropy(&c, &times).unwrap();
        assert!(s.points.iter().all(|p| p.1.abs() < 1e-14));
    }
}
