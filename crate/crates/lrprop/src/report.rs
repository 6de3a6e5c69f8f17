//! JSON and CSV renderings of metrics, training curves and check results.

use std::fmt::Write as _;

use lrprop_core::checks::CheckResult;
use lrprop_core::metrics::EvalReport;
use lrprop_core::trainer::CurvePoint;
use serde_json::{json, Map, Value};

fn fraction_key(f: f64) -> String {
    format!("{f}")
}

pub fn eval_json(r: &EvalReport) -> Value {
    let classification: Map<String, Value> = r
        .phase_classification
        .iter()
        .map(|&(f, a)| (fraction_key(f), json!(a)))
        .collect();
    let ap: Map<String, Value> = r.ap_at_k.iter().map(|&(k, a)| (k.to_string(), json!(a))).collect();
    json!({
        "kendall_tau": r.kendall_tau,
        "phase_classification": classification,
        "phase_progression": r.phase_progression,
        "ap_at_k": ap,
        "dtw_accuracy": r.dtw_accuracy,
    })
}

/// One header row and one row per method, columns in the order
/// method, tau, progress, AP@K..., classification@fraction..., DTW accuracy.
pub fn eval_csv(rows: &[(&str, &EvalReport)]) -> String {
    let mut out = String::from("method,tau,progress");
    if let Some((_, r)) = rows.first() {
        for (k, _) in &r.ap_at_k {
            let _ = write!(out, ",ap@{k}");
        }
        for (f, _) in &r.phase_classification {
            let _ = write!(out, ",classification@{}", fraction_key(*f));
        }
    }
    out.push_str(",dtw_accuracy\n");
    for (name, r) in rows {
        let _ = write!(out, "{name},{},{}", r.kendall_tau, r.phase_progression);
        for (_, a) in &r.ap_at_k {
            let _ = write!(out, ",{a}");
        }
        for (_, a) in &r.phase_classification {
            let _ = write!(out, ",{a}");
        }
        let _ = writeln!(out, ",{}", r.dtw_accuracy);
    }
    out
}

pub const CURVE_HEADER: &str = "step,loss_same,loss_prop,loss_sdtw,combined,lr\n";

pub fn curve_rows(curve: &[CurvePoint]) -> String {
    let mut out = String::new();
    for p in curve {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.step, p.loss_same, p.loss_prop, p.loss_sdtw, p.combined, p.lr
        );
    }
    out
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    format!("{CURVE_HEADER}{}", curve_rows(curve))
}

pub fn check_json(results: &[CheckResult]) -> Value {
    Value::Array(
        results
            .iter()
            .map(|r| {
                json!({
                    "name": r.name,
                    "tolerance": r.tolerance,
                    "observed": r.observed,
                    "passed": r.passed,
                })
            })
            .collect(),
    )
}

pub fn check_table(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        let _ = writeln!(
            out,
            "{} {:<40} observed {:.3e}  tolerance {:.1e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.observed,
            r.tolerance
        );
    }
    out
}
