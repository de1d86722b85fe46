//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion, driven through
//! the bundled scenario files. Exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use polarsim_cli::{germany, load_scenario, simulate, staircase, sweep, thresholds, CliError, RunSummary, Scenario};
use polarsim_core::dynamics::VectorField;
use polarsim_core::equilibria::{interior_equilibrium, symmetric_equilibrium, SymmetricEquilibrium};
use polarsim_core::spectral::r_rad;
use polarsim_core::verify::{run_all, VerifyOptions};

/// Collects sub-checks of one criterion.
struct Criterion {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    /// `|got - want| <= tol`, recording both values.
    fn close(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        self.check(
            (got - want).abs() <= tol,
            format!("{label} = {got:.6} (want {want} +- {tol:e})"),
        );
    }

    fn fail(&mut self, what: impl Into<String>) {
        self.failures.push(what.into());
    }
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

type Command = fn(&Scenario, &Path) -> Result<RunSummary, CliError>;

fn run(c: &mut Criterion, name: &str, out: &Path, f: Command) -> Option<RunSummary> {
    match load_scenario(&scenario(name)) {
        Ok(scn) => match f(&scn, out) {
            Ok(s) => Some(s),
            Err(e) => {
                c.fail(format!("{name}: {e}"));
                None
            }
        },
        Err(e) => {
            c.fail(format!("{name}: {e}"));
            None
        }
    }
}

fn equilibria(c: &mut Criterion, _: &Path) {
    for (beta, mu, p_cap, c_cap) in [(0.40, 0.20, 0.25, 0.50), (0.75, 0.20, 0.367, 0.267)] {
        match symmetric_equilibrium(beta, mu) {
            SymmetricEquilibrium::Interior { p_star, c_star } => {
                c.close(&format!("P*(beta={beta})"), p_star, p_cap, 1e-3);
                c.close(&format!("C*(beta={beta})"), c_star, c_cap, 1e-3);
                // exact forms: C* = mu/beta, and the state sums to one
                c.close(&format!("C* - mu/beta (beta={beta})"), c_star - mu / beta, 0.0, 1e-12);
                c.close(
                    &format!("2P* + C* - 1 (beta={beta})"),
                    2.0 * p_star + c_star - 1.0,
                    0.0,
                    1e-12,
                );
            }
            SymmetricEquilibrium::CentristOnly => c.fail(format!("no interior equilibrium at beta = {beta}")),
        }
    }
}

fn pf_thresholds(c: &mut Criterion, _: &Path) {
    for (name, want) in [("fig_asym_traj_left", 0.840), ("fig_asym_traj_right", 1.593)] {
        match load_scenario(&scenario(name)) {
            Ok(s) => c.close(
                &format!("R_rad({name})"),
                r_rad(s.variants[0].params.base()),
                want,
                1e-3,
            ),
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    let Ok(s) = load_scenario(&scenario("fig_asym_traj_right")) else {
        return c.fail("fig_asym_traj_right does not load");
    };
    let p = *s.variants[0].params.base();
    match interior_equilibrium(&p).state() {
        Some(e) => {
            c.close("L*", e.l(), 0.285, 1e-3);
            c.close("R*", e.r(), 0.088, 1e-3);
            c.close("C*", e.c(), 0.628, 1e-3);
            let f = p.eval(&e.to_array());
            let res = f[0].abs().max(f[1].abs());
            c.check(res < 1e-10, format!("field residual {res:.2e} < 1e-10"));
        }
        None => c.fail("no interior equilibrium for the right panel"),
    }
}

fn asym_threshold(c: &mut Criterion, out: &Path) {
    match load_scenario(&scenario("toy_asym_threshold")).map(|s| thresholds(&s, None)) {
        Ok(Ok(list)) => match &list[0].thresholds.delta_c_asym {
            Some(d) => {
                let dc = d.threshold.value().unwrap_or(f64::NAN);
                c.close("delta_c_asym(toy)", dc, 0.2347, 1e-4);
                match d.bisection {
                    Some(b) => c.check((b - dc).abs() < 1e-9, format!("bisection {b:.10} agrees to 1e-9")),
                    None => c.fail("no bisection cross-check"),
                }
            }
            None => c.fail("no matrix threshold for the toy parameters"),
        },
        Ok(Err(e)) => c.fail(e.to_string()),
        Err(e) => c.fail(e.to_string()),
    }
    if let Some(s) = run(c, "fig_phi_delta", out, sweep) {
        for (v, want) in s.variants.iter().zip([0.091, 0.116]) {
            let dc = v
                .thresholds
                .delta_c_asym
                .as_ref()
                .and_then(|d| d.threshold.value())
                .unwrap_or(f64::NAN);
            c.close(&format!("Phi crossing ({})", v.label), dc, want, 1e-3);
        }
    }
}

fn dynamics(c: &mut Criterion, out: &Path) {
    for name in ["fig_ts_left", "fig_ts_centre", "fig_ts_right"] {
        if let Some(s) = run(c, name, out, simulate) {
            let r = &s.variants[0].runs[0];
            c.check(
                r.distance < 1e-4,
                format!("{name}: |x(t={}) - x*| = {:.2e} < 1e-4", r.final_time, r.distance),
            );
            if name == "fig_ts_left" {
                let radical = r.terminal[0].max(r.terminal[1]);
                c.check(radical < 1e-6, format!("{name}: max(L, R) = {radical:.2e} < 1e-6"));
            }
        }
    }
    if let Some(s) = run(c, "fig_asym_traj_right", out, simulate) {
        let r = &s.variants[0].runs[0];
        c.check(r.final_time == 2000.0, format!("horizon {}", r.final_time));
        c.close("L(2000)", r.terminal[0], 0.285, 1e-3);
        c.close("R(2000)", r.terminal[1], 0.088, 1e-3);
    }
}

fn shock_regimes(c: &mut Criterion, out: &Path) {
    let t_star = 10.0 * 2.2f64.ln();
    if let Some(s) = run(c, "fig_regimes_left", out, simulate) {
        let v = &s.variants[0];
        let dc = v.thresholds.delta_c.and_then(|t| t.value()).unwrap_or(f64::NAN);
        c.close("delta_c", dc, 0.25, 1e-12);
        let r = &v.runs[0];
        c.check(!r.shocks[0].surge, "left: no surge");
        c.check(r.floors == [1.0], format!("left: floor {:?}", r.floors));
        c.check(
            r.terminal[2] > 1.0 - 1e-3,
            format!("left: C(end) = {:.6}", r.terminal[2]),
        );
    }
    if let Some(s) = run(c, "fig_regimes_centre", out, simulate) {
        let r = &s.variants[0].runs[0];
        let rec = &r.shocks[0];
        c.check(rec.surge, "centre: surge");
        match rec.surge_end {
            Some(t) => c.check(
                t <= t_star,
                format!("centre: surge ends {t:.4} after the shock <= t* = {t_star:.4}"),
            ),
            None => c.fail("centre: surge does not end"),
        }
        let w = rec.window.unwrap_or(f64::NAN);
        c.close("centre: window t*", w, t_star, 1e-12);
        c.check(r.floors == [1.0], format!("centre: floor {:?}", r.floors));
        c.check(
            r.terminal[2] > 1.0 - 1e-3,
            format!("centre: C(end) = {:.6}", r.terminal[2]),
        );
    }
    if let Some(s) = run(c, "fig_regimes_right", out, simulate) {
        let r = &s.variants[0].runs[0];
        c.close("right: floor", r.floors[0], 0.40 / 0.45, 1e-12);
        c.close("right: C(end)", r.terminal[2], 0.8889, 1e-3);
    }
}

fn staircase_check(c: &mut Criterion, out: &Path) {
    if let Some(s) = run(c, "fig_staircase", out, staircase) {
        let r = &s.variants[0].runs[0];
        c.check(r.k_star == Some(3), format!("k* = {:?}", r.k_star));
        for (k, (got, want)) in r.floors.iter().zip([1.0, 1.0, 0.9524, 0.8696]).enumerate() {
            c.close(&format!("floor {}", k + 1), *got, want, 1e-4);
        }
        if let Some(k) = r.k_star {
            let after = &r.floors[k - 1..];
            c.check(
                after.windows(2).all(|w| w[1] < w[0]) && r.floors[k - 1] < r.floors[k - 2],
                "floors strictly decrease from k* on",
            );
        }
        match &r.settled_floors {
            Some(settled) => {
                for (k, (got, rec)) in settled.iter().zip(&r.shocks).enumerate() {
                    let want = rec.b_k.map_or(1.0, |b| (0.40 / b).min(1.0));
                    c.close(&format!("settled C after shock {}", k + 1), *got, want, 1e-3);
                }
            }
            None => c.fail("no settled floors"),
        }
    }
    if let Some(s) = run(c, "fig_staircase_pure", out, staircase) {
        let r = &s.variants[0].runs[0];
        c.check(
            r.floors.iter().all(|&f| f == 1.0),
            format!("pure-state floors {:?}", r.floors),
        );
    }
}

fn property_suites(c: &mut Criterion, _: &Path) {
    match run_all(&VerifyOptions::default()) {
        Ok(reports) => {
            for r in reports {
                c.check(
                    r.pass,
                    format!("{} ({} samples, worst {:.3e})", r.name, r.samples, r.worst),
                );
            }
        }
        Err(e) => c.fail(e.to_string()),
    }
}

fn germany_demo(c: &mut Criterion, out: &Path) {
    match germany(out) {
        Ok(r) => {
            for row in &r.rows {
                c.close(&format!("V+C+A ({})", row.year), row.total(), 1.0, 5e-4);
            }
            c.close("radical floor 1", r.radical_floors[0], 0.1165, 1e-4);
            c.close("radical floor 2", r.radical_floors[1], 0.2458, 1e-4);
            for (i, (got, want)) in r.a_exc.iter().zip([0.115, 0.068, 0.064, 0.0]).enumerate() {
                c.close(&format!("A_exc[{i}]"), *got, want, 5e-4);
            }
            c.check(r.checks.a_exc_nonincreasing, "A_exc nonincreasing");
            c.check(r.checks.radical_rise, "V(2021) < V(2025)");
        }
        Err(e) => c.fail(e.to_string()),
    }
    if let Some(s) = run(c, "table_germany", out, staircase) {
        let r = &s.variants[0].runs[0];
        for (k, want) in [0.8835, 0.7542].iter().enumerate() {
            c.close(&format!("sequence floor {}", k + 1), r.floors[k], *want, 1e-4);
            let settled = r.settled_floors.as_ref().map_or(f64::NAN, |v| v[k]);
            c.close(&format!("settled floor {}", k + 1), settled, *want, 1e-3);
        }
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: [(&str, fn(&mut Criterion, &Path)); 8] = [
        ("equilibrium closed forms", equilibria),
        ("Perron thresholds and asymmetric equilibrium", pf_thresholds),
        ("asymmetric shock threshold and Phi crossings", asym_threshold),
        ("dynamics convergence", dynamics),
        ("shock regimes", shock_regimes),
        ("staircase", staircase_check),
        ("property suites", property_suites),
        ("Germany demo", germany_demo),
    ];
    let verbose = std::env::args().any(|a| a == "--verbose" || a == "-v");
    let mut failed = 0;
    for (name, f) in criteria {
        let mut c = Criterion::new();
        let start = Instant::now();
        f(&mut c, dir.path());
        let secs = start.elapsed().as_secs_f64();
        let pass = c.failures.is_empty();
        println!(
            "[{}] {name} ({} checks, {secs:.2}s)",
            if pass { "PASS" } else { "FAIL" },
            c.notes.len() + c.failures.len()
        );
        for f in &c.failures {
            println!("       failed: {f}");
        }
        if verbose {
            for n in &c.notes {
                println!("       ok: {n}");
            }
        }
        if !pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
