//! `verify`: the seeded property suites.

use std::path::Path;

use polarsim_core::verify::{run_all, VerifyOptions};
use polarsim_core::DiagnosticReport;
use serde::Serialize;

use crate::error::CliError;
use crate::output::write_json;
use crate::run::create_out_dir;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutcome {
    pub options: VerifyOptions,
    pub reports: Vec<DiagnosticReport>,
    pub pass: bool,
}

/// Runs every suite. Writes `verify_report.json` when `out` is given.
pub fn verify(opts: VerifyOptions, out: Option<&Path>) -> Result<VerifyOutcome, CliError> {
    let reports = run_all(&opts)?;
    let pass = reports.iter().all(|r| r.pass);
    let outcome = VerifyOutcome {
        options: opts,
        reports,
        pass,
    };
    if let Some(dir) = out {
        create_out_dir(dir)?;
        write_json(&dir.join("verify_report.json"), &outcome)?;
    }
    Ok(outcome)
}

/// One line per report; failures add the witness on the following line.
pub fn format_report(r: &DiagnosticReport) -> String {
    let mut s = format!(
        "[{}] {:<28} samples={:<9} worst={:.3e}  ({})",
        if r.pass { "PASS" } else { "FAIL" },
        r.name,
        r.samples,
        r.worst,
        r.criterion
    );
    if let (false, Some(w)) = (r.pass, &r.witness) {
        s.push_str(&format!("\n       witness {:?}", w.point));
        if let Some(t) = w.time {
            s.push_str(&format!(" at t = {t}"));
        }
        if !w.detail.is_empty() {
            s.push_str(&format!(": {}", w.detail));
        }
    }
    s
}
