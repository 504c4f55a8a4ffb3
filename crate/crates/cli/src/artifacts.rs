//! On-disk artifact formats: JSON reports that embed the resolved
//! configuration, plain-text coefficient tables, and traced-curve CSV.
//!
//! Every writer here is deterministic. JSON objects serialize with
//! alphabetically ordered keys, floats print in shortest round-trip form,
//! and repeated runs of the same configuration produce byte-identical
//! files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use singdetect::{Basis, FilterReport, FitReport, TraceResult};

use crate::config::ResolvedConfig;
use crate::CliError;

/// Fit report as written to disk: the report fields at the top level
/// (`coefficients`, `residual`, `eigen_gap`, `warnings`, ...) plus the
/// resolved configuration that produced them under `config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitArtifact {
    #[serde(flatten)]
    pub fit: FitReport,
    pub config: ResolvedConfig,
}

/// Filter report as written to disk, with the resolved configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterArtifact {
    #[serde(flatten)]
    pub filter: FilterReport,
    pub config: ResolvedConfig,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("cannot serialize {}: {e}", path.display())))?;
    body.push('\n');
    fs::write(path, body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn read_fit_artifact(path: &Path) -> Result<FitArtifact, CliError> {
    let body = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&body)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn read_filter_artifact(path: &Path) -> Result<FilterArtifact, CliError> {
    let body = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&body)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Traced polylines as CSV with columns `segment_id,x,y`. Coordinates
/// print in shortest round-trip form, so the file parses back exactly.
pub fn curve_csv(trace: &TraceResult) -> String {
    let mut out = String::from("segment_id,x,y\n");
    for (segment, polyline) in trace.polylines.iter().enumerate() {
        for p in polyline {
            let _ = writeln!(out, "{segment},{},{}", p.x, p.y);
        }
    }
    out
}

/// Plain-text coefficient table with one labeled row per basis term.
pub fn coefficient_table(basis: &Basis, report: &FitReport) -> String {
    let labels = basis.term_labels();
    let width = label_width(&labels);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>18}", "term", "coefficient");
    for (label, c) in labels.iter().zip(&report.coefficients) {
        let _ = writeln!(out, "{label:<width$}  {c:>18.12}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "residual:  {:.6e}", report.residual);
    let _ = writeln!(out, "eigen gap: {:.6e}", report.eigen_gap);
    for warning in &report.warnings {
        let _ = writeln!(out, "warning:   {}", describe_warning(warning));
    }
    out
}

/// Side-by-side comparison of fitted against exact unit coefficients.
///
/// Coefficients are only identified up to sign, so the fitted vector is
/// flipped first whenever that lowers the worst-case error; the `error`
/// column is the per-term absolute difference after that alignment.
pub fn comparison_table(basis: &Basis, fitted: &[f64], exact: &[f64]) -> String {
    let sign = alignment_sign(fitted, exact);
    let labels = basis.term_labels();
    let width = label_width(&labels);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>18}  {:>18}  {:>12}",
        "term", "fitted", "exact", "error"
    );
    let mut max_err = 0.0_f64;
    for ((label, f), e) in labels.iter().zip(fitted).zip(exact) {
        let aligned = sign * f;
        let err = (aligned - e).abs();
        max_err = max_err.max(err);
        let _ = writeln!(out, "{label:<width$}  {aligned:>18.12}  {e:>18.12}  {err:>12.3e}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "max error: {max_err:.3e}");
    if sign < 0.0 {
        let _ = writeln!(out, "(fitted coefficients were negated to match the exact sign)");
    }
    out
}

/// The sign s in {-1, +1} minimizing max_k |s c_k - e_k|.
pub fn alignment_sign(fitted: &[f64], exact: &[f64]) -> f64 {
    let linf = |s: f64| {
        fitted
            .iter()
            .zip(exact)
            .map(|(f, e)| (s * f - e).abs())
            .fold(0.0, f64::max)
    };
    if linf(-1.0) < linf(1.0) {
        -1.0
    } else {
        1.0
    }
}

pub fn describe_warning(warning: &singdetect::FitWarning) -> String {
    match warning {
        singdetect::FitWarning::RankDeficient { points, terms } => {
            format!("rank deficient: {points} point(s) for {terms} basis terms")
        }
        singdetect::FitWarning::NonUnique { gap } => {
            format!("minimizer is not unique (eigen gap {gap:.3e})")
        }
    }
}

fn label_width(labels: &[String]) -> usize {
    labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(4)
}
