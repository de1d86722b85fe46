//! Analytic parameter sweeps; no integration.

use std::path::Path;

use polarsim_core::equilibria::baseline_reports;
use polarsim_core::spectral::{delta_c_asym_params, phi, r_rad};
use polarsim_core::ModelParams;
use rayon::prelude::*;

use crate::config::{ConfigError, Scenario, SweepKind, Variant};
use crate::error::CliError;
use crate::output::{fmt_f64, fmt_opt, write_json, CsvTable};
use crate::run::{create_out_dir, relative, variant_summary, RunSummary};

/// Cartesian product of the axis values, first axis outermost.
fn grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, values| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect()
    })
}

fn equilibrium_row(scn: &Scenario, v: &Variant, names: &[&str], point: &[f64]) -> Result<Vec<String>, CliError> {
    let mut spec = v.spec;
    for (n, x) in names.iter().zip(point) {
        spec.set(n, *x);
    }
    let params = spec.resolve(scn.model, &v.path)?;
    let base = params.base();
    let [_, e1] = baseline_reports(base);
    let (l, r) = e1.location.map_or((0.0, 0.0), |s| (s.l(), s.r()));
    // transcritical point of the symmetric family: beta = mu, i.e. gamma* = mu - alpha
    let gamma_star = base.symmetric_beta_mu().map(|_| base.mu_l() - base.alpha_l());
    let mut row = vec![v.label.clone()];
    row.extend(point.iter().map(|x| fmt_f64(*x)));
    row.extend([
        fmt_f64(r_rad(base)),
        e1.exists.to_string(),
        fmt_f64(l),
        fmt_f64(r),
        fmt_f64(0.5 * (l + r)),
        fmt_f64(1.0 - l - r),
        e1.classification.map_or("none", |c| c.as_str()).to_string(),
        fmt_opt(gamma_star),
    ]);
    Ok(row)
}

fn phi_row(v: &Variant, x: f64) -> Result<Vec<String>, CliError> {
    let ModelParams::FourGroup(q) = v.params else {
        return Err(ConfigError::new(v.path.clone(), "a phi sweep needs four-group parameters").into());
    };
    let base = q.base();
    let value = phi(x, &base.recruitment(), &base.decay(), &q.mobilisation())?;
    let dc = delta_c_asym_params(&q).ok().and_then(|t| t.value());
    Ok(vec![v.label.clone(), fmt_f64(x), fmt_f64(value), fmt_opt(dc)])
}

/// Evaluates the sweep grid for every variant and writes `<name>_sweep.csv`
/// in long format, one row per (variant, grid point), plus `<name>_summary.json`.
///
/// Equilibrium sweeps report `r_rad`, the interior equilibrium (zeros when
/// absent), its classification and `gamma_star = mu - alpha` for symmetric
/// parameters. Phi sweeps report `Phi(shock_delta)` and the crossing `delta_c`.
pub fn sweep(scn: &Scenario, out: &Path) -> Result<RunSummary, CliError> {
    let Some(sw) = &scn.sweep else {
        return Err(ConfigError::new("sweep", "`sweep` needs a [sweep] table").into());
    };
    create_out_dir(out)?;
    let names: Vec<&str> = sw.axes.iter().map(|a| a.name.as_str()).collect();
    let values: Vec<Vec<f64>> = sw.axes.iter().map(|a| a.values.clone()).collect();
    let points = grid(&values);
    let jobs: Vec<(&Variant, &Vec<f64>)> = scn
        .variants
        .iter()
        .flat_map(|v| points.iter().map(move |p| (v, p)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|(v, p)| match sw.kind {
            SweepKind::Equilibrium => equilibrium_row(scn, v, &names, p),
            SweepKind::Phi => phi_row(v, p[0]),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut header = vec!["variant"];
    header.extend(&names);
    match sw.kind {
        SweepKind::Equilibrium => header.extend([
            "r_rad",
            "exists",
            "L_star",
            "R_star",
            "P_star",
            "C_star",
            "classification",
            "gamma_star",
        ]),
        SweepKind::Phi => header.extend(["phi", "delta_c"]),
    }
    let path = out.join(format!("{}_sweep.csv", scn.name));
    let mut table = CsvTable::create(&path, &header)?;
    for row in rows {
        table.row(row)?;
    }
    let file = relative(table.finish()?);

    let variants = scn
        .variants
        .iter()
        .map(|v| variant_summary(&v.label, &v.params, &scn.shocks))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = RunSummary {
        name: scn.name.clone(),
        command: "sweep".into(),
        model: scn.model,
        a_background: scn.a_background,
        variants,
        diagnostics: Vec::new(),
        files: vec![file],
    };
    write_json(&out.join(format!("{}_summary.json", scn.name)), &summary)?;
    Ok(summary)
}
