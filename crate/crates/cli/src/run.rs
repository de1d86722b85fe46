//! `simulate`, `staircase` and `thresholds`.

use std::path::Path;

use polarsim_core::diagnostics::{
    a_decay_check, boundary_inflow_check, lyapunov_trace_4group, lyapunov_trace_baseline, LyapunovKind,
};
use polarsim_core::dynamics::{detect_convergence, integrate, Trajectory};
use polarsim_core::equilibria::{
    baseline_attractor, baseline_reports, e0_stability, four_group_attractor, four_group_reports, E0Stability,
    EquilibriumReport,
};
use polarsim_core::shock::{
    kstar, longrun_floor_general, run_shock_sequence, settle_floors, window_bound_asym, window_bound_sym, AsymWindow,
    Regime, ShockRecord, ShockSequenceReport,
};
use polarsim_core::spectral::{
    delta_c_asym_detail, delta_c_sym, pf_root, AsymThresholdDetail, PerronData, ShockThreshold,
};
use polarsim_core::{
    BaselineParams, DiagnosticReport, FourGroupParams, ModelParams, ShockEvent, SimplexPoint, SimplexState3,
    SimplexState4,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, ModelKind, Scenario};
use crate::error::CliError;
use crate::output::{fmt_f64, fmt_opt, write_json, CsvTable, FileEntry};

/// Distance to the attractor at which a run counts as converged.
pub const CONVERGENCE_EPS: f64 = 1e-3;

/// Analytic thresholds of one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub r_rad: f64,
    pub regime: Regime,
    pub perron: PerronData,
    pub e0: E0Stability,
    /// Scalar critical shock for symmetric four-group parameters.
    pub delta_c: Option<ShockThreshold>,
    /// Matrix critical shock, with its algebraic and bisection routes.
    pub delta_c_asym: Option<AsymThresholdDetail>,
    /// Surge window bound `t*` for the first shock (symmetric case).
    pub t_star: Option<f64>,
    /// Weighted-mass window for the first shock (general case).
    pub window_asym: Option<AsymWindow>,
    /// First shock after which the radical-free state is unstable.
    pub k_star: Option<usize>,
    /// Long-run centrist share of a seeded run without further shocks.
    pub floor: f64,
    /// Reasons why a quantity above is absent.
    pub notes: Vec<String>,
}

impl Thresholds {
    pub fn compute(params: &ModelParams, shocks: &[ShockEvent]) -> Self {
        let base = params.base();
        let perron = pf_root(&base.recruitment(), &base.decay());
        let mut notes = Vec::new();
        let mut out = Thresholds {
            r_rad: perron.lambda_pf,
            regime: Regime::of(perron.lambda_pf),
            perron,
            e0: e0_stability(base),
            delta_c: None,
            delta_c_asym: None,
            t_star: None,
            window_asym: None,
            k_star: None,
            floor: if perron.lambda_pf > 1.0 {
                1.0 / perron.lambda_pf
            } else {
                1.0
            },
            notes: Vec::new(),
        };
        let ModelParams::FourGroup(q) = params else {
            return out;
        };
        out.floor = longrun_floor_general(q, true);
        let sym = base
            .symmetric_beta_mu()
            .map(|(beta, mu)| (beta, mu, q.delta_l(), q.rho()));
        if let Some((beta, mu, delta, _)) = sym {
            match delta_c_sym(beta, mu, delta) {
                Ok(t) => out.delta_c = Some(t),
                Err(e) => notes.push(format!("delta_c: {e}")),
            }
        }
        match delta_c_asym_detail(&base.recruitment(), &base.decay(), &q.mobilisation()) {
            Ok(d) => out.delta_c_asym = Some(d),
            Err(e) => notes.push(format!("delta_c_asym: {e}")),
        }
        if let Some(first) = shocks.first() {
            if let Some((beta, mu, delta, rho)) = sym {
                match window_bound_sym(first.delta, beta, mu, delta, rho) {
                    Ok(t) => out.t_star = Some(t),
                    Err(e) => notes.push(format!("t_star: {e}")),
                }
            }
            match window_bound_asym(first.delta, q) {
                Ok(w) => out.window_asym = Some(w),
                Err(e) => notes.push(format!("window_asym: {e}")),
            }
        }
        if let Some((beta, mu, _, _)) = sym {
            let dbetas: Option<Vec<f64>> = shocks.iter().map(ShockEvent::dbeta).collect();
            match dbetas.filter(|d| !d.is_empty()).map(|d| kstar(beta, mu, &d)) {
                Some(Ok(k)) => out.k_star = k,
                Some(Err(e)) => notes.push(format!("k_star: {e}")),
                None => {}
            }
        }
        out.notes = notes;
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Equilibria {
    Baseline([EquilibriumReport<SimplexState3>; 2]),
    FourGroup([EquilibriumReport<SimplexState4>; 2]),
}

impl Equilibria {
    pub fn compute(params: &ModelParams) -> Result<Self, CliError> {
        Ok(match params {
            ModelParams::Baseline(p) => Equilibria::Baseline(baseline_reports(p)),
            ModelParams::FourGroup(q) => Equilibria::FourGroup(four_group_reports(q)?),
        })
    }
}

/// Analytic attractor a seeded run should approach.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    /// `(L*, R*, A*)`; `A*` is 0 on every attractor.
    pub attractor: [f64; 3],
    pub p_star: f64,
    pub c_star: f64,
}

impl Reference {
    fn of_baseline(p: &BaselineParams) -> Self {
        let s = baseline_attractor(p);
        Self {
            attractor: [s.l(), s.r(), 0.0],
            p_star: 0.5 * s.radical(),
            c_star: s.c(),
        }
    }
}

/// One integrated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub initial: [f64; 3],
    pub final_time: f64,
    /// `(L, R, C, A)` at the final time.
    pub terminal: [f64; 4],
    /// Attractor of the parameters in force at the end of the run.
    pub reference: Reference,
    pub distance: f64,
    /// Earliest time after which the run stays within [`CONVERGENCE_EPS`].
    pub convergence_time: Option<f64>,
    pub floors: Vec<f64>,
    /// Terminal centrist share of each post-shock segment continued alone.
    pub settled_floors: Option<Vec<f64>>,
    pub k_star: Option<usize>,
    pub shocks: Vec<ShockRecord>,
    pub trajectory_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantSummary {
    pub label: String,
    pub params: ModelParams,
    pub thresholds: Thresholds,
    pub equilibria: Equilibria,
    pub reference: Reference,
    pub runs: Vec<RunResult>,
}

/// JSON summary of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub command: String,
    pub model: ModelKind,
    pub a_background: Option<f64>,
    pub variants: Vec<VariantSummary>,
    pub diagnostics: Vec<DiagnosticReport>,
    pub files: Vec<FileEntry>,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.diagnostics.iter().all(|d| d.pass)
    }
}

pub(crate) fn variant_summary(
    label: &str,
    params: &ModelParams,
    shocks: &[ShockEvent],
) -> Result<VariantSummary, CliError> {
    Ok(VariantSummary {
        label: label.into(),
        params: *params,
        thresholds: Thresholds::compute(params, shocks),
        equilibria: Equilibria::compute(params)?,
        reference: Reference::of_baseline(params.base()),
        runs: Vec::new(),
    })
}

enum RunData {
    Baseline(Trajectory<SimplexState3, BaselineParams>),
    FourGroup {
        traj: Trajectory<SimplexState4, FourGroupParams>,
        report: ShockSequenceReport,
        settled: Option<Vec<f64>>,
    },
}

struct Computed {
    variant: usize,
    initial: [f64; 3],
    data: RunData,
    diagnostics: Vec<DiagnosticReport>,
}

fn tagged(stem: &str, mut r: DiagnosticReport) -> DiagnosticReport {
    r.name = format!("{stem}:{}", r.name);
    r
}

fn compute_run(
    scn: &Scenario,
    variant: usize,
    initial: [f64; 3],
    stem: &str,
    settle: bool,
) -> Result<Computed, CliError> {
    let cfg = scn.integrator;
    let params = scn.variants[variant].params;
    let mut diagnostics = vec![tagged(stem, boundary_inflow_check(&params, 50))];
    let data = match params {
        ModelParams::Baseline(p) => {
            let traj = integrate(&p, SimplexState3::raw(initial[0], initial[1]), &cfg)?;
            if let Ok(r) = lyapunov_trace_baseline(&traj) {
                diagnostics.push(tagged(stem, r));
            }
            RunData::Baseline(traj)
        }
        ModelParams::FourGroup(q) => {
            let s0 = SimplexState4::raw(initial[0], initial[1], initial[2]);
            let (traj, report) = run_shock_sequence(&q, s0, &scn.shocks, &cfg)?;
            diagnostics.push(tagged(stem, a_decay_check(&traj)));
            for kind in [LyapunovKind::Subcritical4Group, LyapunovKind::Symmetric4Group] {
                // only the functions whose hypotheses hold on every segment apply
                if let Ok(r) = lyapunov_trace_4group(kind, &traj) {
                    diagnostics.push(tagged(stem, r));
                }
            }
            let settled = match scn.settle_horizon {
                Some(h) if settle && !report.records.is_empty() => Some(settle_floors(&report, h, &cfg)?),
                _ => None,
            };
            RunData::FourGroup { traj, report, settled }
        }
    };
    Ok(Computed {
        variant,
        initial,
        data,
        diagnostics,
    })
}

fn file_stem(scn: &Scenario, variant: usize, ic: usize) -> String {
    let mut stem = scn.name.clone();
    if scn.variants.len() > 1 {
        stem.push('_');
        stem.push_str(&scn.variants[variant].label);
    }
    if scn.initial.len() > 1 {
        stem.push_str(&format!("_ic{ic}"));
    }
    stem
}

fn write_trajectory(path: &Path, data: &RunData, a_background: Option<f64>) -> Result<FileEntry, CliError> {
    match data {
        RunData::Baseline(tr) => {
            let mut t = CsvTable::create(path, &["t", "L", "R", "C"])?;
            for (time, s) in tr.samples() {
                t.row([time, s.l(), s.r(), s.c()].map(fmt_f64))?;
            }
            t.finish()
        }
        RunData::FourGroup { traj, .. } => {
            let mut header = vec!["t", "L", "R", "C", "A"];
            if a_background.is_some() {
                header.push("A_obs");
            }
            let mut t = CsvTable::create(path, &header)?;
            for (time, s) in traj.samples() {
                let mut row = vec![time, s.l(), s.r(), s.c(), s.a()];
                if let Some(bg) = a_background {
                    row.push(s.a() + bg);
                }
                t.row(row.into_iter().map(fmt_f64))?;
            }
            t.finish()
        }
    }
}

fn write_shock_table(
    path: &Path,
    report: &ShockSequenceReport,
    settled: Option<&[f64]>,
) -> Result<FileEntry, CliError> {
    let mut t = CsvTable::create(
        path,
        &[
            "k",
            "t_k",
            "delta_k",
            "dbeta_k",
            "B_k",
            "regime",
            "floor",
            "r_rad",
            "surge",
            "surge_end",
            "peak_radical",
            "settled_C",
        ],
    )?;
    for (i, r) in report.records.iter().enumerate() {
        t.row([
            r.k.to_string(),
            fmt_f64(r.time),
            fmt_f64(r.delta),
            fmt_opt(r.dbeta),
            fmt_opt(r.b_k),
            r.regime_after.as_str().to_string(),
            fmt_f64(r.floor),
            fmt_f64(r.r_rad_after),
            r.surge.to_string(),
            fmt_opt(r.surge_end),
            fmt_f64(r.peak_radical),
            fmt_opt(settled.map(|s| s[i])),
        ])?;
    }
    t.finish()
}

fn run_result(c: &Computed, file: String) -> RunResult {
    match &c.data {
        RunData::Baseline(tr) => {
            let s = *tr.final_state();
            let target = baseline_attractor(&tr.segments[0].params);
            RunResult {
                initial: c.initial,
                final_time: tr.final_time(),
                terminal: [s.l(), s.r(), s.c(), 0.0],
                reference: Reference::of_baseline(&tr.segments[0].params),
                distance: s.distance_inf(&target),
                convergence_time: detect_convergence(tr, &target, CONVERGENCE_EPS).time(),
                floors: Vec::new(),
                settled_floors: None,
                k_star: None,
                shocks: Vec::new(),
                trajectory_file: file,
            }
        }
        RunData::FourGroup { traj, report, settled } => {
            let s = *traj.final_state();
            let last = traj.segments.last().map(|g| g.params).unwrap_or(report.initial_params);
            let target = four_group_attractor(&last);
            // convergence is measured on the final segment only
            let (times, states) = traj.segment_samples(traj.segments.len() - 1);
            let conv = states
                .iter()
                .rposition(|x| x.distance_inf(&target) > CONVERGENCE_EPS)
                .map_or(times.first().copied(), |i| times.get(i + 1).copied());
            RunResult {
                initial: c.initial,
                final_time: traj.final_time(),
                terminal: [s.l(), s.r(), s.c(), s.a()],
                reference: Reference::of_baseline(last.base()),
                distance: s.distance_inf(&target),
                convergence_time: conv,
                floors: report.floors(),
                settled_floors: settled.clone(),
                k_star: report.k_star,
                shocks: report.records.clone(),
                trajectory_file: file,
            }
        }
    }
}

pub(crate) fn create_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn integrate_scenario(scn: &Scenario, out: &Path, command: &str, staircase: bool) -> Result<RunSummary, CliError> {
    if scn.initial.is_empty() {
        return Err(ConfigError::new("initial", format!("`{command}` needs at least one initial state")).into());
    }
    if staircase && scn.shocks.is_empty() {
        return Err(ConfigError::new("shocks", "`staircase` needs at least one shock").into());
    }
    create_out_dir(out)?;
    let jobs: Vec<(usize, usize)> = (0..scn.variants.len())
        .flat_map(|v| (0..scn.initial.len()).map(move |i| (v, i)))
        .collect();
    let computed = jobs
        .par_iter()
        .map(|&(v, i)| compute_run(scn, v, scn.initial[i], &file_stem(scn, v, i), staircase))
        .collect::<Result<Vec<_>, _>>()?;

    let mut variants = scn
        .variants
        .iter()
        .map(|v| variant_summary(&v.label, &v.params, &scn.shocks))
        .collect::<Result<Vec<_>, _>>()?;
    let mut files = Vec::new();
    let mut diagnostics = Vec::new();
    for (c, &(v, i)) in computed.iter().zip(&jobs) {
        let stem = file_stem(scn, v, i);
        let name = format!("{stem}_trajectory.csv");
        files.push(relative(write_trajectory(&out.join(&name), &c.data, scn.a_background)?));
        if let RunData::FourGroup { report, settled, .. } = &c.data {
            if !report.records.is_empty() {
                let path = out.join(format!("{stem}_shocks.csv"));
                files.push(relative(write_shock_table(&path, report, settled.as_deref())?));
            }
        }
        variants[c.variant].runs.push(run_result(c, name));
        diagnostics.extend(c.diagnostics.iter().cloned());
    }
    let summary = RunSummary {
        name: scn.name.clone(),
        command: command.into(),
        model: scn.model,
        a_background: scn.a_background,
        variants,
        diagnostics,
        files,
    };
    write_json(&out.join(format!("{}_summary.json", scn.name)), &summary)?;
    Ok(summary)
}

/// Manifest entries carry file names, not the output directory.
pub(crate) fn relative(mut f: FileEntry) -> FileEntry {
    if let Some(name) = f.path.file_name() {
        f.path = name.into();
    }
    f
}

/// Integrates every variant from every initial state, applying the shock
/// sequence for four-group scenarios. Writes `<name>[_<label>][_ic<k>]_trajectory.csv`
/// per run, a per-shock table when shocks are present, and `<name>_summary.json`.
pub fn simulate(scn: &Scenario, out: &Path) -> Result<RunSummary, CliError> {
    integrate_scenario(scn, out, "simulate", false)
}

/// As [`simulate`], but requires shocks and also settles each post-shock
/// segment over `staircase.settle_horizon` when given.
pub fn staircase(scn: &Scenario, out: &Path) -> Result<RunSummary, CliError> {
    if scn.model != ModelKind::FourGroup {
        return Err(ConfigError::new("model", "`staircase` needs the four_group model").into());
    }
    integrate_scenario(scn, out, "staircase", true)
}

/// Analytic thresholds of every variant, with the first shock as the
/// reference amplitude. Writes `<name>_thresholds.json` when `out` is given.
pub fn thresholds(scn: &Scenario, out: Option<&Path>) -> Result<Vec<VariantSummary>, CliError> {
    let list = scn
        .variants
        .iter()
        .map(|v| variant_summary(&v.label, &v.params, &scn.shocks))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = out {
        create_out_dir(dir)?;
        write_json(&dir.join(format!("{}_thresholds.json", scn.name)), &list)?;
    }
    Ok(list)
}
