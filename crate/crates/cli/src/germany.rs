//! Bundestag 2013-2025 proxy rows and the two-shock calibration.

use std::path::Path;

use polarsim_core::model::{proxy_decompose, ELECTORATE_ROW_TOL};
use polarsim_core::shock::{kstar, longrun_floor};
use polarsim_core::ElectorateRow;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{fmt_f64, write_json, CsvTable, FileEntry};
use crate::run::{create_out_dir, relative};

/// `(year, turnout, radical share of votes cast)`. The shares are the
/// electorate fractions `V` (three decimals) divided by turnout.
pub const ELECTIONS: [(&str, f64, f64); 4] = [
    ("2013", 0.715, 0.133),
    ("2017", 0.762, 0.218),
    ("2021", 0.766, 0.1515),
    ("2025", 0.830, 0.2964),
];

/// Reference `(V, C, A)` per row, rounded to three decimals, for comparison with the decomposition.
pub const REFERENCE: [[f64; 3]; 4] = [
    [0.095, 0.620, 0.285],
    [0.166, 0.596, 0.238],
    [0.116, 0.650, 0.234],
    [0.246, 0.584, 0.170],
];

pub const BETA0: f64 = 0.18;
pub const MU: f64 = 0.22;
/// Structural increments attributed to the 2017 and 2025 shocks.
pub const DBETA: [f64; 2] = [0.069, 0.0427];
/// Non-voting share treated as background rather than crisis-induced.
pub const A_BACKGROUND: f64 = 0.170;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GermanyChecks {
    /// Largest `|V + C + A - 1|` over the rows.
    pub max_row_error: f64,
    /// Largest deviation of a decomposed entry from the reference table.
    pub max_table_error: f64,
    pub rows_sum_to_one: bool,
    pub a_exc_nonincreasing: bool,
    /// `V(2021) < V(2025)`.
    pub radical_rise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GermanyReport {
    pub rows: Vec<ElectorateRow>,
    pub beta0: f64,
    pub mu: f64,
    pub dbeta: [f64; 2],
    /// `beta_1`, `beta_2` after each structural shock.
    pub beta: [f64; 2],
    /// Long-run centrist floors `mu / beta_k`.
    pub floors: [f64; 2],
    /// Long-run radical shares `1 - mu / beta_k`.
    pub radical_floors: [f64; 2],
    pub k_star: Option<usize>,
    pub a_background: f64,
    /// Crisis excess `A - A_bg` per row.
    pub a_exc: Vec<f64>,
    pub checks: GermanyChecks,
    pub files: Vec<FileEntry>,
}

pub fn germany_rows() -> Result<Vec<ElectorateRow>, CliError> {
    ELECTIONS
        .iter()
        .map(|&(year, turnout, share)| Ok(proxy_decompose(share, turnout)?.with_year(year)))
        .collect()
}

/// Computes the report without writing anything.
pub fn germany_report() -> Result<GermanyReport, CliError> {
    let rows = germany_rows()?;
    let beta = [BETA0 + DBETA[0], BETA0 + DBETA[0] + DBETA[1]];
    let floors = [longrun_floor(beta[0], MU, true)?, longrun_floor(beta[1], MU, true)?];
    let a_exc: Vec<f64> = rows.iter().map(|r| r.a - A_BACKGROUND).collect();
    let max_row_error = rows.iter().map(|r| (r.total() - 1.0).abs()).fold(0.0, f64::max);
    let max_table_error = rows
        .iter()
        .zip(REFERENCE)
        .flat_map(|(r, p)| [(r.v - p[0]).abs(), (r.c - p[1]).abs(), (r.a - p[2]).abs()])
        .fold(0.0, f64::max);
    let checks = GermanyChecks {
        max_row_error,
        max_table_error,
        rows_sum_to_one: max_row_error <= ELECTORATE_ROW_TOL,
        // the last entry is zero only up to rounding
        a_exc_nonincreasing: a_exc.windows(2).all(|w| w[1] <= w[0] + 1e-12),
        radical_rise: rows[2].v < rows[3].v,
    };
    Ok(GermanyReport {
        rows,
        beta0: BETA0,
        mu: MU,
        dbeta: DBETA,
        beta,
        floors,
        radical_floors: floors.map(|f| 1.0 - f),
        k_star: kstar(BETA0, MU, &DBETA)?,
        a_background: A_BACKGROUND,
        a_exc,
        checks,
        files: Vec::new(),
    })
}

/// Writes `germany_rows.csv` and `germany_floors.json` under `out`.
pub fn germany(out: &Path) -> Result<GermanyReport, CliError> {
    let mut report = germany_report()?;
    create_out_dir(out)?;
    let path = out.join("germany_rows.csv");
    let mut t = CsvTable::create(
        &path,
        &["year", "turnout", "radical_share", "V", "C", "A", "total", "A_exc"],
    )?;
    for ((row, &(_, turnout, share)), exc) in report.rows.iter().zip(&ELECTIONS).zip(&report.a_exc) {
        t.row([
            row.year.clone(),
            fmt_f64(turnout),
            fmt_f64(share),
            fmt_f64(row.v),
            fmt_f64(row.c),
            fmt_f64(row.a),
            fmt_f64(row.total()),
            fmt_f64(*exc),
        ])?;
    }
    report.files.push(relative(t.finish()?));
    write_json(&out.join("germany_floors.json"), &report)?;
    Ok(report)
}
