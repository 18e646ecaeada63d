//! Deterministic JSON and CSV emission.
//!
//! Floats are written with 17 significant digits; non-finite floats become
//! `null` in JSON and empty cells in CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ancgeom::report::InequalityReport;
use ancgeom::sweep::{AbpCase, SweepCell, ABP_CSV_HEADER, SWEEP_CSV_HEADER};
use serde_json::Value;

/// `{:.16e}`, or the empty string for NaN and ±∞.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Pretty-printed JSON with two-space indent and a trailing newline.
pub fn json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) if !n.is_f64() => {
                let _ = write!(out, "{i}");
            }
            (_, Some(u), _) if !n.is_f64() => {
                let _ = write!(out, "{u}");
            }
            (_, _, Some(x)) if x.is_finite() => out.push_str(&float(x)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                write_value(out, item, depth + 1);
            }
            newline(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_value(out, v, depth + 1);
            }
            newline(out, depth);
            out.push('}');
        }
    }
}

fn newline(out: &mut String, depth: usize) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

pub const REPORT_CSV_HEADER: &str = "theorem,lhs,rhs,ratio,slack,error_budget,status";

pub fn reports_csv(reports: &[InequalityReport]) -> String {
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.theorem.name(),
            float(r.lhs),
            float(r.rhs),
            opt_float(r.ratio),
            float(r.slack),
            float(r.error_budget),
            r.status.name()
        );
    }
    out
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for c in cells {
        let r = &c.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.case_id,
            c.manifold,
            c.n,
            float(c.radius),
            c.density,
            float(r.lhs),
            float(r.rhs),
            opt_float(r.ratio),
            float(r.slack),
            float(r.error_budget),
            r.status.name()
        );
    }
    out
}

pub fn abp_csv(cases: &[AbpCase]) -> String {
    let mut out = format!("{ABP_CSV_HEADER}\n");
    for c in cases {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.case_id,
            float(c.r),
            float(c.det_p),
            float(c.bound),
            float(c.margin),
            c.status.name()
        );
    }
    out
}

pub const RATIO_PLOT_HEADER: &str = "n,density,R,ratio,slack,error_budget";
pub const SLACK_PLOT_HEADER: &str = "manifold,n,R,density,b1,slack";

/// Plot-ready CSVs for a sweep, keyed by file name: one `ratio_vs_R_<manifold>.csv`
/// per manifold kind and a combined `slack_vs_b1.csv`. An empty sweep gives
/// header-only `ratio_vs_R.csv` and `slack_vs_b1.csv`.
pub fn emit_plot_data(cells: &[SweepCell]) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    let mut slack = format!("{SLACK_PLOT_HEADER}\n");
    if cells.is_empty() {
        files.insert("ratio_vs_R.csv".to_string(), format!("{RATIO_PLOT_HEADER}\n"));
    }
    for c in cells {
        let r = &c.report;
        let file = files
            .entry(format!("ratio_vs_R_{}.csv", c.manifold))
            .or_insert_with(|| format!("{RATIO_PLOT_HEADER}\n"));
        let _ = writeln!(
            file,
            "{},{},{},{},{},{}",
            c.n,
            c.density,
            float(c.radius),
            opt_float(r.ratio),
            float(r.slack),
            float(r.error_budget)
        );
        let b1 = profile_b1(&r.inputs);
        let _ = writeln!(slack, "{},{},{},{},{},{}", c.manifold, c.n, float(c.radius), c.density, opt_float(b1), float(r.slack));
    }
    files.insert("slack_vs_b1.csv".to_string(), slack);
    files
}

fn profile_b1(inputs: &Value) -> Option<f64> {
    let p: ancgeom::profile::CurvatureProfile = serde_json::from_value(inputs.get("profile")?.clone()).ok()?;
    Some(p.b1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(float(1.0), "1.0000000000000000e0");
        assert_eq!(float(-0.1), "-1.0000000000000001e-1");
        assert_eq!(float(f64::NAN), "");
        assert_eq!(float(f64::INFINITY), "");
    }

    #[test]
    fn json_round_trips() {
        let v = json!({"b": [1, 2.5, null], "a": {"x": -3, "s": "q\""}, "e": []});
        let text = json(&v);
        assert!(text.contains("2.5000000000000000e0"));
        assert!(text.contains("-3"));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
    }

    #[test]
    fn empty_plot_data_is_header_only() {
        let files = emit_plot_data(&[]);
        assert_eq!(files["ratio_vs_R.csv"], format!("{RATIO_PLOT_HEADER}\n"));
        assert_eq!(files["slack_vs_b1.csv"], format!("{SLACK_PLOT_HEADER}\n"));
        assert_eq!(reports_csv(&[]), format!("{REPORT_CSV_HEADER}\n"));
    }
}
