use std::sync::OnceLock;

use approx::assert_relative_eq;
use proptest::prelude::*;
use wlsi_core::calculus::bregman_xlogx;
use wlsi_core::oracle::{sinh_nodes, DiscreteOperator};
use wlsi_core::pipeline::rate::log_grid;
use wlsi_core::pipeline::RateFunction;
use wlsi_core::transport::{hopf_lax, Cost, MetricMap, TransportGrid};
use wlsi_core::{make_builtin, Measure, MeasureKind, Weight};

fn cauchy() -> &'static Measure {
    static MU: OnceLock<Measure> = OnceLock::new();
    MU.get_or_init(|| make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap())
}

fn expo_grid() -> &'static TransportGrid {
    static GRID: OnceLock<TransportGrid> = OnceLock::new();
    GRID.get_or_init(|| {
        let mu = make_builtin(MeasureKind::Exponential, 1).unwrap();
        let w = Weight::new("1+|x|", |x: f64| 1.0 + x.abs());
        TransportGrid::for_measure(&mu, &w, 2001, 1e-12).unwrap()
    })
}

fn graded_nodes(n: usize) -> Vec<f64> {
    sinh_nodes(50.0, n | 1, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_is_monotone_and_satisfies_the_triangle_inequality(
        a in 0.0f64..3.0, k in 0.0f64..2.0,
        x in -40.0f64..40.0, y in -40.0f64..40.0, z in -40.0f64..40.0,
    ) {
        let w = Weight::new("1+a|x|^k", move |x: f64| 1.0 + a * x.abs().powf(k));
        let map = MetricMap::new(&w, &graded_nodes(801)).unwrap();
        prop_assert!(map.phi.windows(2).all(|p| p[1] > p[0]));
        let (dxy, dyz, dxz) = (map.distance(x, y), map.distance(y, z), map.distance(x, z));
        prop_assert!(dxz <= dxy + dyz + 1e-12);
        // omega >= 1 makes the weighted distance shorter than the flat one
        prop_assert!(dxy <= (x - y).abs() * (1.0 + 1e-9) + 1e-12);
        prop_assert!((map.inverse(map.phi(x)) - x).abs() <= 1e-8 * (1.0 + x.abs()));
    }

    #[test]
    fn hopf_lax_is_below_g_and_decreasing_in_time(
        coef in prop::collection::vec(-2.0f64..2.0, 4),
        t in 0.05f64..2.0, dt in 0.01f64..1.0,
    ) {
        let u: Vec<f64> = (0..301).map(|i| (-3.0 + 6.0 * i as f64 / 300.0f64).sinh()).collect();
        let g: Vec<f64> = u
            .iter()
            .map(|&x| coef[0] * (x * coef[1]).sin() + coef[2] * x.abs().sqrt() + coef[3] * x.tanh())
            .collect();
        let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
        for cost in [Cost::Quadratic, Cost::Linear] {
            let q1 = hopf_lax(&g, &u, t, cost);
            let q2 = hopf_lax(&g, &u, t + dt, cost);
            for i in 0..u.len() {
                prop_assert!(q1[i] <= g[i] + 1e-12);
                prop_assert!(q2[i] <= q1[i] + 1e-12);
                prop_assert!(q2[i] >= gmin - 1e-12);
            }
            if cost == Cost::Linear {
                // inf of 1/t-Lipschitz functions
                for i in 1..u.len() {
                    prop_assert!((q1[i] - q1[i - 1]).abs() <= (u[i] - u[i - 1]) / t * (1.0 + 1e-9) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn w1_is_below_w2_and_matches_the_cdf_formula(theta in -0.45f64..0.45, c in -3.0f64..3.0, width in 0.5f64..4.0) {
        let grid = expo_grid();
        let nu = grid
            .density("tilted bump", move |x| (theta * x).exp() * (1.0 + (-((x - c) / width).powi(2)).exp()))
            .unwrap();
        let w1 = grid.wasserstein(&nu, 1).unwrap();
        let w2 = grid.wasserstein(&nu, 2).unwrap();
        prop_assert!(w1 <= w2 * (1.0 + 1e-9) + 1e-12);
        prop_assert!((w1 - grid.w1_cdf(&nu).unwrap()).abs() <= 1e-5 * (1.0 + w1));
        prop_assert!(grid.entropy(&nu).unwrap() >= 0.0);
    }

    #[test]
    fn bregman_entropy_density_matches_x_log_x(g in 1e-6f64..50.0) {
        let direct = g * g.ln() - g + 1.0;
        let b = bregman_xlogx(g);
        prop_assert!(b >= 0.0);
        prop_assert!((b - direct).abs() <= 1e-12 * (1.0 + direct.abs()) + 1e-15);
    }

    #[test]
    fn discrete_generator_is_symmetric(seed in prop::collection::vec(-1.0f64..1.0, 8)) {
        let w = Weight::new("1+x^2", |x: f64| 1.0 + x * x);
        let op = DiscreteOperator::build(cauchy(), &w, &sinh_nodes(100.0, 201, 1.0));
        let xs = sinh_nodes(100.0, 201, 1.0);
        let f: Vec<f64> = xs.iter().map(|&x| seed[0] * x.atan() + seed[1] * (seed[2] * x).sin() + seed[3]).collect();
        let g: Vec<f64> = xs.iter().map(|&x| seed[4] * (x / 10.0).tanh() + seed[5] * (seed[6] * x).cos() + seed[7]).collect();
        let fl: f64 = op.mean(&f.iter().zip(op.apply(&g)).map(|(a, b)| a * b).collect::<Vec<_>>());
        let gl: f64 = op.mean(&g.iter().zip(op.apply(&f)).map(|(a, b)| a * b).collect::<Vec<_>>());
        let scale = op.dirichlet(&f).max(op.dirichlet(&g)).max(1e-300);
        prop_assert!((fl - gl).abs() <= 1e-10 * scale);
        let ff: f64 = op.mean(&f.iter().zip(op.apply(&f)).map(|(a, b)| a * b).collect::<Vec<_>>());
        prop_assert!((ff + op.dirichlet(&f)).abs() <= 1e-10 * scale.max(ff.abs()));
    }

    #[test]
    fn enforced_rates_are_non_increasing_majorants(vals in prop::collection::vec(-5.0f64..5.0, 2..40)) {
        let s = log_grid(1e-3, 10.0, vals.len());
        let v = vals.clone();
        let mut r = RateFunction::from_ln_fn(s.clone(), |x| v[s.iter().position(|&y| y == x).unwrap()], None);
        r.enforce_monotone();
        prop_assert!(r.is_non_increasing());
        for (a, b) in r.ln_beta.iter().zip(&vals) {
            prop_assert!(a >= b);
        }
    }

    #[test]
    fn cauchy_tail_mass_matches_closed_form(r in 0.0f64..500.0) {
        let exact = (4.0 / std::f64::consts::PI)
            * (std::f64::consts::FRAC_PI_4 - r / (2.0 * (1.0 + r * r)) - r.atan() / 2.0);
        let m = cauchy().tail_mass(r).unwrap();
        prop_assert!((m - exact).abs() <= 1e-9 * exact.max(1e-300) + 1e-14);
    }
}

#[test]
fn exponential_grid_mass_is_one() {
    let grid = expo_grid();
    assert_relative_eq!(grid.mean(|_| 1.0), 1.0, max_relative = 1e-12);
}
