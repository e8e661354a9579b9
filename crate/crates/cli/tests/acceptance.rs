//! End-to-end acceptance: one PASS/FAIL line per criterion. Runs the release-style binary for
//! the reproduce cases and calls the core library for the rest.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use wlsi_core::dynamics::{admissible_p, tail_check};
use wlsi_core::lyapunov::{cauchy_certificate, exponential_certificate};
use wlsi_core::oracle::{sinh_nodes, uniform_nodes, DiscreteOperator};
use wlsi_core::pipeline::fsobolev::{fsobolev_to_swpi_default, rescale_factor_range, swpi_to_fsobolev};
use wlsi_core::pipeline::rate::default_grid;
use wlsi_core::pipeline::{derive_chain, ChainOptions, RateFunction};
use wlsi_core::transport::{renormalized_weight, t2_check, TransportGrid};
use wlsi_core::{make_builtin, Measure, MeasureKind, TestFunction, Weight};

type Profile = (&'static str, fn(f64) -> f64);

struct Run {
    report: Value,
    elapsed: Duration,
    code: i32,
}

fn wlsi(dir: &Path, args: &[&str]) -> Run {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_wlsi"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    let text = std::fs::read_to_string(dir.join("report.json")).expect("report.json written");
    Run { report: serde_json::from_str(&text).unwrap(), elapsed, code: out.status.code().unwrap_or(-1) }
}

impl Run {
    fn check(&self, name: &str) -> (bool, String) {
        let checks = self.report["checks"].as_array().unwrap();
        match checks.iter().find(|c| c["name"] == name) {
            Some(c) => (c["passed"].as_bool().unwrap(), c["detail"].as_str().unwrap().to_string()),
            None => (false, format!("no `{name}` line")),
        }
    }

    fn checks_with_prefix(&self, prefix: &str) -> Vec<(String, bool)> {
        self.report["checks"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|c| c["name"].as_str().unwrap().starts_with(prefix))
            .map(|c| (c["name"].as_str().unwrap().to_string(), c["passed"].as_bool().unwrap()))
            .collect()
    }

    /// (pairs scanned, pairs violated) for one inequality kind
    fn scan(&self, kind: &str) -> (usize, usize) {
        let rows = self.report["results"]["scan"].as_array().unwrap();
        let rows: Vec<_> = rows.iter().filter(|r| r["inequality"].as_str().unwrap().split('(').next() == Some(kind)).collect();
        (rows.len(), rows.iter().filter(|r| r["violated"].as_bool().unwrap()).count())
    }

    fn families(&self) -> usize {
        let mut f: Vec<&str> = self.report["results"]["scan"].as_array().unwrap().iter().map(|r| r["family"].as_str().unwrap()).collect();
        f.sort();
        f.dedup();
        f.len()
    }
}

/// Written to the process stdout directly so the lines show up without `--nocapture`.
fn emit(line: String) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

struct Ledger {
    lines: Vec<(usize, bool, bool, String)>,
}

impl Ledger {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        emit(format!("criterion {id:>2} [{}] {detail}", if pass { "PASS" } else { "FAIL" }));
        self.lines.push((id, pass, true, detail));
    }

    /// reported but not asserted
    fn report_only(&mut self, id: usize, pass: bool, detail: String) {
        emit(format!("criterion {id:>2} [{}] (not asserted) {detail}", if pass { "PASS" } else { "FAIL" }));
        self.lines.push((id, pass, false, detail));
    }
}

fn derived_weight(mu: &Measure, cert: &wlsi_core::lyapunov::Certificate) -> (Weight, f64) {
    let chain = derive_chain(mu, cert, &ChainOptions::default()).unwrap();
    (chain.swpi.weight.clone(), chain.lsi.c_tight)
}

fn criterion_4(ledger: &mut Ledger) {
    let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
    let cert = cauchy_certificate(&mu, 2.0, 3.0).unwrap();
    let (derived, _) = derived_weight(&mu, &cert);
    let no_log = Weight::new("1+x^2", |x: f64| 1.0 + x * x);
    let radii = [1e2, 1e3, 1e4];
    let ratios = |w: &Weight| -> Vec<f64> {
        radii
            .iter()
            .map(|&r| DiscreteOperator::build(&mu, w, &sinh_nodes(r, 3001, 1.0)).lsi_ratio_max(12).ratio)
            .collect()
    };
    let a = ratios(&no_log);
    let b = ratios(&derived);
    let growth = |v: &[f64]| v.windows(2).map(|w| w[1] / w[0] - 1.0).collect::<Vec<_>>();
    let ga = growth(&a);
    let spread = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / b.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let pass = ga.iter().all(|&g| g >= 0.25) && spread <= 0.10;
    ledger.report_only(
        4,
        pass,
        format!(
            "lsi_ratio_max at r = 1e2, 1e3, 1e4: weight 1+x^2 {a:.4?} (growth {ga:.3?}, need >= 0.25); derived {b:.4?} (spread {spread:.3}, need <= 0.10)"
        ),
    );
}

fn criterion_5(ledger: &mut Ledger) {
    let flat = Weight::constant(1.0);
    let gauss = make_builtin(MeasureKind::Gaussian, 1).unwrap();
    let r = gauss.radius_for_tail(1e-8).unwrap();
    let op = DiscreteOperator::build(&gauss, &flat, &uniform_nodes(r, 2001));
    let gap_g = op.spectral_gap();
    let lsi_g = op.lsi_ratio_max(12).ratio;
    // the truncated exponential gap is 1/4 + O(R^-2), so the radius is taken well past the 1e-8 tail
    let expo = make_builtin(MeasureKind::Exponential, 1).unwrap();
    let r = 150.0f64;
    let n = 3001;
    let h = 2.0 * r / (n - 1) as f64;
    let tail = expo.tail_mass(r).unwrap();
    let gap_e = DiscreteOperator::build(&expo, &flat, &uniform_nodes(r, n)).spectral_gap();
    let pass = (gap_g - 1.0).abs() <= 0.01
        && (gap_e / 0.25 - 1.0).abs() <= 0.02
        && h <= 1e-3 * r
        && tail <= 1e-8
        && (lsi_g / 2.0 - 1.0).abs() <= 0.02;
    ledger.record(
        5,
        pass,
        format!("gaussian gap {gap_g:.5}, exponential gap {gap_e:.5} (h = {h:.2e}, r_max = {r:.3}), gaussian lsi ratio {lsi_g:.5}"),
    );
}

fn criterion_7(ledger: &mut Ledger) {
    let mu = make_builtin(MeasureKind::Exponential, 1).unwrap();
    let cert = exponential_certificate(&mu, 0.5).unwrap();
    let (w, c_tight) = derived_weight(&mu, &cert);
    let w = renormalized_weight(&w, c_tight);
    let f = TestFunction::new("x", |x| x, |_| 1.0);
    let t = tail_check(&mu, &w, &f, 6).unwrap();
    // ||x||_p = Gamma(p+1)^{1/p} for the two-sided exponential law
    let gamma = |p: f64| (1..=p as u64).map(|k| k as f64).product::<f64>();
    let exact_ok = t.moments.iter().all(|m| (m.f_norm / gamma(m.p).powf(1.0 / m.p) - 1.0).abs() <= 1e-6);
    let moments_ok = t.moments.len() == 5 && t.moments.iter().all(|m| m.holds);
    let tail_ok = t.tail.len() == 50 && t.tail.iter().all(|r| r.holds);

    let cauchy = make_builtin(MeasureKind::Cauchy { beta: 5.0 }, 1).unwrap();
    let cert = cauchy_certificate(&cauchy, 5.0, 3.0).unwrap();
    let (wc, _) = derived_weight(&cauchy, &cert);
    let (ours, _) = admissible_p(&cauchy, &wc, 6);
    let (bl, _) = admissible_p(&cauchy, &Weight::bracket_power(2.0), 6);
    let strict = bl.iter().all(|p| ours.contains(p)) && ours.len() > bl.len();
    ledger.record(
        7,
        exact_ok && moments_ok && tail_ok && strict,
        format!(
            "moments {}/5 (norms match Gamma(p+1)^(1/p): {exact_ok}), tail {}/{} t-points; cauchy(5) p-range derived {ours:?} vs (1+x^2)^2 {bl:?}",
            t.moments.iter().filter(|m| m.holds).count(),
            t.tail.iter().filter(|r| r.holds).count(),
            t.tail.len()
        ),
    );
}

fn gaussian_t2_equality() -> (bool, String) {
    let mu = make_builtin(MeasureKind::Gaussian, 1).unwrap();
    let grid = TransportGrid::for_measure(&mu, &Weight::constant(1.0), 4001, 1e-16).unwrap();
    let family: Vec<_> = [-1.5, -1.0, -0.5, 0.25, 0.75, 1.25, 2.0]
        .iter()
        .map(|&c: &f64| grid.density(format!("tilt {c}"), move |x| (c * x).exp()).unwrap())
        .collect();
    let rep = t2_check(&grid, &family, 2.0).unwrap();
    let worst = rep.rows.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    (worst <= 0.01, format!("gaussian tilts W2^2 / (2 Ent) within {worst:.2e} of 1"))
}

fn criterion_11(ledger: &mut Ledger) {
    let cases: [Profile; 3] =
        [("e^(1/s)", |s| 1.0 / s), ("s^(-1/2) e^(2/s)", |s| -0.5 * s.ln() + 2.0 / s), ("1+s^-2", |s| (1.0 + s.powi(-2)).ln())];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, f) in cases {
        let mut b = RateFunction::from_ln_fn(default_grid(), f, None);
        b.fit_tail(40);
        let fs = swpi_to_fsobolev(&b, 0.25, 2.0).unwrap();
        let back = fsobolev_to_swpi_default(&fs);
        let (lo, hi) = rescale_factor_range(f, &back);
        // beta'(s) >= beta(s), and one time rescaling beta'(s) <= beta(s / lambda) covers the overlap
        let ok = fs.check_invariants() && back.is_non_increasing() && lo >= 1.0 - 1e-9 && hi.is_finite() && hi / lo < 2.0;
        pass &= ok;
        parts.push(format!("{label}: lambda in [{lo:.3}, {hi:.3}]"));
    }
    ledger.record(11, pass, format!("{} (need lambda >= 1, finite, max/min < 2)", parts.join("; ")));
}

fn same_tree(a: &Path, b: &Path) -> (bool, usize) {
    let mut names: Vec<_> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let other = std::fs::read_dir(b).unwrap().count();
    let same = names.len() == other && names.iter().all(|n| std::fs::read(a.join(n)).ok() == std::fs::read(b.join(n)).ok());
    (same, names.len())
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let mut ledger = Ledger { lines: Vec::new() };

    let cauchy = wlsi(&tmp.path().join("cauchy"), &["reproduce", "cauchy", "--beta", "2"]);
    let (asym, detail) = cauchy.check("weight asymptotics");
    let secs = cauchy.elapsed.as_secs_f64();
    ledger.record(1, asym && secs < 60.0, format!("{detail}; runtime {secs:.1} s (need < 60)"));
    let (scaling, detail) = cauchy.check("beta_tilde scaling");
    ledger.record(2, scaling, detail);

    let expo_verify = wlsi(&tmp.path().join("expo_verify"), &["verify", "--set", "measure.kind=exponential"]);
    let (nc, vc) = cauchy.scan("swpi");
    let (ne, ve) = expo_verify.scan("swpi");
    let fams = (cauchy.families(), expo_verify.families());
    ledger.record(
        3,
        nc == 48 && ne == 48 && vc == 0 && ve == 0 && fams == (6, 6),
        format!("cauchy(2) {vc} violations over {nc} pairs, exponential {ve} over {ne}; families {fams:?}"),
    );

    criterion_4(&mut ledger);
    criterion_5(&mut ledger);

    let expo = wlsi(&tmp.path().join("expo"), &["reproduce", "exponential"]);
    let mono = expo.checks_with_prefix("entropy non-increasing");
    let rate = expo.checks_with_prefix("entropy decay rate");
    let literal = expo.checks_with_prefix("literal exp(-t/4)");
    let (dominates, _) = expo.check("derived LSI constant dominates the oracle");
    let ok = |v: &[(String, bool)]| v.len() == 5 && v.iter().all(|c| c.1);
    ledger.record(
        6,
        ok(&mono) && ok(&rate),
        format!(
            "non-increasing {}/5, rate >= 0.95 * 2 / C_emp {}/5; literal exp(-t/4) line {}/5 (reported separately); C_emp <= c_tight: {dominates}",
            mono.iter().filter(|c| c.1).count(),
            rate.iter().filter(|c| c.1).count(),
            literal.iter().filter(|c| c.1).count()
        ),
    );

    criterion_7(&mut ledger);

    let (eq_ok, eq_detail) = gaussian_t2_equality();
    let (t2, t2_detail) = expo.check("T2: W2^2 <= 2 Ent");
    let (bg, bg_detail) = expo.check("Bobkov-Gotze mu(e^{Q_1 g}) <= e^{mu(g)}");
    let (semi, semi_detail) = expo.check("Hopf-Lax semigroup");
    ledger.record(
        8,
        eq_ok && t2 && t2_detail.starts_with("20/20") && bg && bg_detail.starts_with("20/20") && semi,
        format!("{eq_detail}; exponential T2 {t2_detail}; Bobkov-Gotze {bg_detail}; {semi_detail}"),
    );

    let (nw, vw) = cauchy.scan("wlsi");
    let (g_mono, _) = cauchy.check("weak LSI g monotone");
    let (cap, cap_detail) = cauchy.check("capacity comparison");
    ledger.record(
        9,
        nw == 48 && vw == 0 && g_mono && cap && cap_detail.starts_with("10/10"),
        format!("WLSI {vw} violations over {nw} pairs; g monotone {g_mono}; capacities {cap_detail}"),
    );

    let subexp = wlsi(&tmp.path().join("subexp"), &["reproduce", "subexp"]);
    let (drift, _) = subexp.check("drift certificate");
    let (shape, shape_detail) = subexp.check("weight asymptotics");
    let (consts, consts_detail) = subexp.check("modified LSI constants");
    let (nm, vm) = subexp.scan("mlsi");
    ledger.record(
        10,
        drift && shape && consts && nm == 6 && vm == 0,
        format!("certificate {drift}; {shape_detail}; {consts_detail}; MLSI {vm} violations over {nm} families"),
    );

    criterion_11(&mut ledger);

    let again = wlsi(&tmp.path().join("expo_again"), &["reproduce", "exponential"]);
    let (same, files) = same_tree(&tmp.path().join("expo"), &tmp.path().join("expo_again"));
    ledger.record(12, same && again.code == expo.code, format!("two `reproduce exponential` runs: {files} files, identical bytes: {same}"));

    for (name, run) in [("cauchy", &cauchy), ("exponential", &expo), ("subexp", &subexp)] {
        emit(format!("reproduce {name}: exit {} in {:.1} s", run.code, run.elapsed.as_secs_f64()));
    }
    let failed: Vec<usize> = ledger.lines.iter().filter(|l| l.2 && !l.1).map(|l| l.0).collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
