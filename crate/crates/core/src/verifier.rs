//! Empirical testing of functional inequalities: curated families of test functions, lattice
//! scans of the ratio lhs / rhs, and a Nelder-Mead search refining the worst lattice points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{Sampled, TestFunction, Weight};
use crate::error::Result;
use crate::measure::{sinh_breakpoints, Grid, Measure};
use crate::pipeline::YoungPair;

pub const REL_TOL: f64 = 1e-7;
pub const LATTICE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lhs {
    /// Ent(f^2)
    Entropy,
    /// mu(f^2)
    L2,
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Term {
    /// int |f'|^2 omega dmu with the inequality's weight
    WeightedDirichlet,
    Dirichlet,
    MeanAbsSquared,
    OscSquared,
    /// int H(eps^{-1} |f'/f|^2) f^2 dmu with H(x) = |x|^p
    MlsiH { p: f64, epsilon: f64 },
}

/// lhs(f) <= sum_k c_k term_k(f).
#[derive(Debug, Clone)]
pub struct InequalitySpec {
    pub name: String,
    pub lhs: Lhs,
    pub rhs: Vec<(f64, Term)>,
    pub weight: Option<Weight>,
}

impl InequalitySpec {
    pub fn new(name: impl Into<String>, lhs: Lhs, rhs: Vec<(f64, Term)>, weight: Option<Weight>) -> Self {
        assert!(rhs.iter().all(|(c, _)| c.is_finite() && *c >= 0.0), "coefficients must be finite and >= 0");
        InequalitySpec { name: name.into(), lhs, rhs, weight }
    }

    /// Ent(f^2) <= c int |f'|^2 omega dmu
    pub fn lsi(c: f64, weight: Weight) -> Self {
        Self::new(format!("lsi(c={c})"), Lhs::Entropy, vec![(c, Term::WeightedDirichlet)], Some(weight))
    }

    /// Var(f) <= c int |f'|^2 omega dmu
    pub fn poincare(c: f64, weight: Weight) -> Self {
        Self::new(format!("poincare(c={c})"), Lhs::Variance, vec![(c, Term::WeightedDirichlet)], Some(weight))
    }

    /// mu(f^2) <= 2s int |f'|^2 omega dmu + beta_tilde(s) mu(|f|)^2
    pub fn swpi(s: f64, beta_tilde: f64, weight: Weight) -> Self {
        Self::new(
            format!("swpi(s={s:e})"),
            Lhs::L2,
            vec![(2.0 * s, Term::WeightedDirichlet), (beta_tilde, Term::MeanAbsSquared)],
            Some(weight),
        )
    }

    /// Ent(f^2) <= beta(s) int |f'|^2 dmu + s Osc(f)^2
    pub fn weak_lsi(s: f64, beta: f64) -> Self {
        Self::new(format!("wlsi(s={s:e})"), Lhs::Entropy, vec![(beta, Term::Dirichlet), (s, Term::OscSquared)], None)
    }

    /// Ent(f^2) <= c int (H(eps^{-1}|f'/f|^2) f^2 + |f'|^2) dmu
    pub fn mlsi(c: f64, pair: &YoungPair, epsilon: f64) -> Self {
        Self::new(
            format!("mlsi(c={c}, p={})", pair.p),
            Lhs::Entropy,
            vec![(c, Term::MlsiH { p: pair.p, epsilon }), (c, Term::Dirichlet)],
            None,
        )
    }
}

/// Grid, mu-weights and the cap radius L (mu(|x| > L) < 1e-6) shared by all evaluations.
/// Kinks of the test functions are placed on panel breakpoints so that the Gauss rule only
/// sees smooth integrands.
#[derive(Debug, Clone)]
pub struct Context {
    pub grid: Grid,
    pub mu_weights: Vec<f64>,
    pub breakpoints: Vec<f64>,
    pub cap: f64,
    pub seed: u64,
}

impl Context {
    pub fn new(mu: &Measure, panels: usize, seed: u64) -> Result<Self> {
        let grid = Grid::for_measure(mu, 1e-12, panels)?;
        let lo = if mu.dim == 1 { -grid.r_max } else { 0.0 };
        let breakpoints = sinh_breakpoints(lo, grid.r_max, panels + 1, 1.0);
        let mut mu_weights = grid.mu_weights(mu);
        let total: f64 = mu_weights.iter().sum();
        mu_weights.iter_mut().for_each(|m| *m /= total);
        let raw = mu.radius_for_tail(1e-6)?;
        let cap = breakpoints[breakpoints.partition_point(|&b| b < raw).min(breakpoints.len() - 1)];
        Ok(Context { grid, mu_weights, breakpoints, cap, seed })
    }

    fn omega(&self, spec: &InequalitySpec) -> Vec<f64> {
        match &spec.weight {
            Some(w) => self.grid.nodes.iter().map(|&x| w.value(x)).collect(),
            None => vec![1.0; self.grid.len()],
        }
    }
}

/// A spec with the weight tabulated on the context grid.
struct Prepared<'a> {
    spec: &'a InequalitySpec,
    omega: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub lhs: f64,
    pub rhs: f64,
}

impl Evaluation {
    /// NaN on either side counts as a violation: a numerical failure must not pass silently.
    pub fn ratio(&self) -> f64 {
        if self.lhs.is_nan() || self.rhs.is_nan() {
            f64::INFINITY
        } else if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    /// (lhs - rhs) / scale with scale = max(|lhs|, |rhs|); a violation when above REL_TOL.
    pub fn relative_violation(&self) -> f64 {
        if self.lhs.is_nan() || self.rhs.is_nan() {
            return f64::INFINITY;
        }
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale == 0.0 { 0.0 } else { (self.lhs - self.rhs) / scale }
    }
}

fn evaluate(p: &Prepared, s: &Sampled) -> Evaluation {
    let lhs = match p.spec.lhs {
        Lhs::Entropy => s.entropy_sq(),
        Lhs::L2 => s.second_moment(),
        Lhs::Variance => s.variance(),
    };
    // below this level Ent and Var are roundoff: the function is numerically constant
    if p.spec.lhs != Lhs::L2 && lhs <= 1e-10 * s.second_moment() {
        return Evaluation { lhs: 0.0, rhs: 0.0 };
    }
    let mut rhs = 0.0;
    for &(c, term) in &p.spec.rhs {
        if c == 0.0 {
            continue;
        }
        let v = match term {
            Term::WeightedDirichlet => s.dirichlet(&p.omega),
            Term::Dirichlet => s.df.iter().zip(&s.mu).map(|(d, m)| d * d * m).sum(),
            Term::MeanAbsSquared => s.mean_abs().powi(2),
            Term::OscSquared => s.osc().powi(2),
            Term::MlsiH { p, epsilon } => s
                .f
                .iter()
                .zip(&s.df)
                .zip(&s.mu)
                .map(|((&f, &d), &m)| {
                    if d == 0.0 || m == 0.0 {
                        0.0
                    } else if f == 0.0 {
                        f64::INFINITY
                    } else {
                        // |f'/f|^{2p} f^2 in log space: in the tails both f and f' underflow
                        (m.ln() - p * epsilon.ln() + 2.0 * p * d.abs().ln() + (2.0 - 2.0 * p) * f.abs().ln()).exp()
                    }
                })
                .sum(),
        };
        rhs += c * v;
    }
    Evaluation { lhs, rhs }
}

/// lhs and rhs of `spec` for one test function on the context grid.
pub fn evaluate_function(spec: &InequalitySpec, f: &TestFunction, ctx: &Context) -> Evaluation {
    let p = Prepared { spec, omega: ctx.omega(spec) };
    evaluate(&p, &Sampled::new(f, &ctx.grid, &ctx.mu_weights))
}

type Generator = fn(&[f64], &FamilyScales) -> TestFunction;

/// Measure-dependent scales handed to the generators.
#[derive(Debug, Clone)]
pub struct FamilyScales {
    pub cap: f64,
    /// two fixed random knot-value vectors for the piecewise-linear family
    pub knots: [[f64; 8]; 2],
    pub breakpoints: Vec<f64>,
}

impl FamilyScales {
    fn snap(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        let i = b.partition_point(|&v| v < x).min(b.len() - 1);
        if i > 0 && (x - b[i - 1]).abs() < (b[i] - x).abs() { b[i - 1] } else { b[i] }
    }

    /// Width of the panel containing x: the smallest length scale the Gauss rule resolves.
    fn resolution(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        let i = b.partition_point(|&v| v <= x).clamp(1, b.len() - 1);
        b[i] - b[i - 1]
    }
}

#[derive(Clone)]
pub struct Family {
    pub id: &'static str,
    /// theta box in units resolved by `bounds`
    pub bounds: fn(f64) -> Vec<(f64, f64)>,
    pub generate: Generator,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id)
    }
}

fn clamp_cap(x: f64, cap: f64) -> (f64, f64) {
    if x.abs() <= cap { (x, 1.0) } else { (x.signum() * cap, 0.0) }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 { 1.0 / (1.0 + (-t).exp()) } else { let e = t.exp(); e / (1.0 + e) }
}

fn tilt(theta: &[f64], sc: &FamilyScales) -> TestFunction {
    let (t, cap) = (theta[0], sc.cap);
    TestFunction::new(
        "tilt",
        move |x| (0.5 * t * clamp_cap(x, cap).0).exp(),
        move |x| {
            let (y, inside) = clamp_cap(x, cap);
            inside * 0.5 * t * (0.5 * t * y).exp()
        },
    )
}

fn power_bump(theta: &[f64], sc: &FamilyScales) -> TestFunction {
    let (k, c, cap) = (theta[0], theta[1], sc.cap);
    TestFunction::new(
        "power-bump",
        move |x| {
            let y = clamp_cap(x, cap).0 - c;
            (1.0 + y * y).powf(0.5 * k)
        },
        move |x| {
            let (y, inside) = clamp_cap(x, cap);
            let y = y - c;
            inside * k * y * (1.0 + y * y).powf(0.5 * k - 1.0)
        },
    )
}

fn smoothed_indicator(theta: &[f64], sc: &FamilyScales) -> TestFunction {
    let a = theta[0];
    let (w, floor) = (10f64.powf(theta[1]).max(sc.resolution(a)), 10f64.powf(theta[2]));
    TestFunction::new("indicator", move |x| floor + logistic((x - a) / w), move |x| {
        let l = logistic((x - a) / w);
        l * (1.0 - l) / w
    })
}

fn wavelet(theta: &[f64], sc: &FamilyScales) -> TestFunction {
    let c = theta[0];
    let (sigma, b) = (theta[1].exp().max(sc.resolution(c)), theta[2]);
    TestFunction::new(
        "wavelet",
        move |x| {
            let t = (x - c) / sigma;
            b + (1.0 - t * t) * (-0.5 * t * t).exp()
        },
        move |x| {
            let t = (x - c) / sigma;
            (t * t * t - 3.0 * t) * (-0.5 * t * t).exp() / sigma
        },
    )
}

fn odd_polynomial(theta: &[f64], sc: &FamilyScales) -> TestFunction {
    let (sigma, c3) = (theta[0].exp().max(sc.resolution(0.0)), theta[1]);
    TestFunction::new(
        "odd-poly",
        move |x| {
            let t = x / sigma;
            (t + c3 * t * t * t) * (-0.25 * t * t).exp()
        },
        move |x| {
            let t = x / sigma;
            let p = t + c3 * t * t * t;
            ((1.0 + 3.0 * c3 * t * t) - 0.5 * t * p) * (-0.25 * t * t).exp() / sigma
        },
    )
}

fn piecewise_linear(theta: &[f64], sc: &FamilyScales) -> TestFunction {
    let (amp, spread, phase) = (theta[0], theta[1].exp(), theta[2]);
    let n = 8;
    let mut xs = [0.0; 8];
    let mut ys = [0.0; 8];
    for k in 0..n {
        let u = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
        xs[k] = sc.snap(spread * (3.0 * u).sinh() / 3f64.sinh());
        ys[k] = 1.0 + amp * (phase.cos() * sc.knots[0][k] + phase.sin() * sc.knots[1][k]);
    }
    let locate = move |x: f64| -> Option<usize> {
        if x <= xs[0] || x >= xs[n - 1] { None } else { Some(xs.partition_point(|&k| k <= x) - 1) }
    };
    TestFunction::new(
        "piecewise-linear",
        move |x| match locate(x) {
            None => if x <= xs[0] { ys[0] } else { ys[n - 1] },
            Some(i) => ys[i] + (ys[i + 1] - ys[i]) * (x - xs[i]) / (xs[i + 1] - xs[i]),
        },
        move |x| match locate(x) {
            None => 0.0,
            Some(i) => (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]),
        },
    )
}

/// The six curated families.
pub fn builtin_families() -> Vec<Family> {
    vec![
        Family {
            id: "tilt",
            // e^{theta L / 2} stays far from overflow
            bounds: |cap| {
                let t = 4f64.min(300.0 / cap);
                vec![(-t, t)]
            },
            generate: tilt,
        },
        Family { id: "power-bump", bounds: |_| vec![(-2.0, 4.0), (-1.0, 1.0)], generate: power_bump },
        Family {
            id: "indicator",
            bounds: |cap| vec![(-cap, cap), (-1.3, cap.log10()), (-4.0, 0.0)],
            generate: smoothed_indicator,
        },
        Family {
            id: "wavelet",
            bounds: |cap| vec![(-cap, cap), (0.05f64.ln(), cap.ln()), (0.0, 2.0)],
            generate: wavelet,
        },
        Family { id: "odd-poly", bounds: |cap| vec![(0.1f64.ln(), cap.ln()), (-1.0, 1.0)], generate: odd_polynomial },
        Family {
            id: "piecewise-linear",
            bounds: |cap| vec![(0.05, 0.95), (0.5f64.ln(), cap.ln()), (0.0, std::f64::consts::TAU)],
            generate: piecewise_linear,
        },
    ]
}

impl Family {
    pub fn scales(ctx: &Context) -> FamilyScales {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut knots = [[0.0; 8]; 2];
        for row in knots.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        FamilyScales { cap: ctx.cap, knots, breakpoints: ctx.breakpoints.clone() }
    }

    pub fn generate(&self, theta: &[f64], ctx: &Context) -> TestFunction {
        (self.generate)(theta, &Self::scales(ctx))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub family: String,
    pub inequality: String,
    pub max_ratio: f64,
    pub max_violation: f64,
    pub argmax: Vec<f64>,
    pub evaluations: usize,
    pub violated: bool,
}

/// One pass over the theta lattice, scoring every spec; returns the per-spec best and the
/// lattice points sorted by ratio (for seeding the search).
fn lattice_pass(specs: &[InequalitySpec], family: &Family, ctx: &Context) -> Vec<(ScanResult, Vec<Vec<f64>>)> {
    let prepared: Vec<Prepared> = specs.iter().map(|s| Prepared { spec: s, omega: ctx.omega(s) }).collect();
    let bounds = (family.bounds)(ctx.cap);
    let dim = bounds.len();
    let total = LATTICE.pow(dim as u32);
    let scales = Family::scales(ctx);
    let mut scored: Vec<Vec<(f64, f64, Vec<f64>)>> = vec![Vec::with_capacity(total); specs.len()];
    for idx in 0..total {
        let mut rem = idx;
        let theta: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| {
                let k = rem % LATTICE;
                rem /= LATTICE;
                lo + (hi - lo) * k as f64 / (LATTICE - 1) as f64
            })
            .collect();
        let f = (family.generate)(&theta, &scales);
        let s = Sampled::new(&f, &ctx.grid, &ctx.mu_weights);
        for (j, p) in prepared.iter().enumerate() {
            let e = evaluate(p, &s);
            scored[j].push((e.ratio(), e.relative_violation(), theta.clone()));
        }
    }
    specs
        .iter()
        .zip(scored)
        .map(|(spec, mut pts)| {
            // stable order: ratio descending, ties kept in lattice order
            pts.sort_by(|a, b| b.0.total_cmp(&a.0));
            let (ratio, viol, arg) = pts[0].clone();
            let res = ScanResult {
                family: family.id.to_string(),
                inequality: spec.name.clone(),
                max_ratio: ratio,
                max_violation: viol,
                argmax: arg,
                evaluations: total,
                violated: viol > REL_TOL,
            };
            (res, pts.into_iter().take(5).map(|p| p.2).collect())
        })
        .collect()
}

/// Lattice scan: max over 32 points per theta-dimension of the relative violation.
pub fn ratio_scan(spec: &InequalitySpec, family: &Family, ctx: &Context) -> ScanResult {
    lattice_pass(std::slice::from_ref(spec), family, ctx).remove(0).0
}

/// Scans several specs over one lattice pass.
pub fn ratio_scan_many(specs: &[InequalitySpec], family: &Family, ctx: &Context) -> Vec<ScanResult> {
    lattice_pass(specs, family, ctx).into_iter().map(|r| r.0).collect()
}

fn objective(p: &Prepared, family: &Family, scales: &FamilyScales, ctx: &Context, theta: &[f64]) -> (f64, f64) {
    let f = (family.generate)(theta, scales);
    let s = Sampled::new(&f, &ctx.grid, &ctx.mu_weights);
    let e = evaluate(p, &s);
    (e.ratio(), e.relative_violation())
}

/// Lattice scan followed by Nelder-Mead from the five best lattice points, clamped to the box.
/// The result is never worse than the lattice optimum.
pub fn adversarial_search(spec: &InequalitySpec, family: &Family, ctx: &Context, budget: usize) -> ScanResult {
    adversarial_search_many(std::slice::from_ref(spec), family, ctx, budget).remove(0)
}

/// `adversarial_search` for several specs sharing one lattice pass.
pub fn adversarial_search_many(specs: &[InequalitySpec], family: &Family, ctx: &Context, budget: usize) -> Vec<ScanResult> {
    let budget = budget.max(100);
    let bounds = (family.bounds)(ctx.cap);
    let scales = Family::scales(ctx);
    lattice_pass(specs, family, ctx)
        .into_iter()
        .zip(specs)
        .map(|((mut best, starts), spec)| {
            let prepared = Prepared { spec, omega: ctx.omega(spec) };
            let per_start = budget / starts.len().max(1);
            let mut evals = 0;
            for x0 in starts {
                let f = |theta: &[f64]| objective(&prepared, family, &scales, ctx, theta);
                let (theta, (ratio, viol), used) = nelder_mead_max(&f, &x0, &bounds, per_start);
                evals += used;
                if ratio > best.max_ratio {
                    best.max_ratio = ratio;
                    best.max_violation = viol;
                    best.argmax = theta;
                }
            }
            best.evaluations += evals;
            best.violated = best.max_violation > REL_TOL;
            best
        })
        .collect()
}

/// Maximises the first component of f over a box; returns (argmax, value, evaluations).
fn nelder_mead_max(
    f: &dyn Fn(&[f64]) -> (f64, f64),
    x0: &[f64],
    bounds: &[(f64, f64)],
    budget: usize,
) -> (Vec<f64>, (f64, f64), usize) {
    let n = x0.len();
    let clamp = |x: Vec<f64>| -> Vec<f64> { x.iter().zip(bounds).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect() };
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        (if v.0.is_nan() { f64::NEG_INFINITY } else { v.0 }, v.1)
    };
    let mut simplex: Vec<(Vec<f64>, (f64, f64))> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        let (lo, hi) = bounds[i];
        let step = 0.05 * (hi - lo);
        x[i] = if x[i] + step <= hi { x[i] + step } else { x[i] - step };
        let v = eval(&x);
        simplex.push((x, v));
    }
    while evals.get() + n + 2 <= budget {
        simplex.sort_by(|a, b| b.1 .0.total_cmp(&a.1 .0));
        let spread = simplex[0].1 .0 - simplex[n].1 .0;
        if spread.abs() <= 1e-14 * simplex[0].1 .0.abs() && evals.get() > 4 * (n + 1) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|p| p.0[k]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let along = |t: f64| clamp(centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect());
        let xr = along(1.0);
        let fr = eval(&xr);
        if fr.0 > simplex[0].1 .0 {
            let xe = along(2.0);
            let fe = eval(&xe);
            simplex[n] = if fe.0 > fr.0 { (xe, fe) } else { (xr, fr) };
        } else if fr.0 > simplex[n - 1].1 .0 {
            simplex[n] = (xr, fr);
        } else {
            let xc = along(if fr.0 > worst.1 .0 { 0.5 } else { -0.5 });
            let fc = eval(&xc);
            if fc.0 > worst.1 .0.max(fr.0) {
                simplex[n] = (xc, fc);
            } else {
                let top = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let x = clamp(top.iter().zip(&p.0).map(|(a, b)| a + 0.5 * (b - a)).collect());
                    let v = eval(&x);
                    *p = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1 .0.total_cmp(&a.1 .0));
    let (x, v) = simplex.swap_remove(0);
    (x, v, evals.get())
}
