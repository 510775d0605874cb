//! Plain-text emitters for reports, field tables, and the coefficient
//! table. All floating-point values are printed with 17 significant digits
//! so golden-file comparisons are meaningful at double precision.

use kahlerlab::verify::{CheckMode, CheckReport, InstanceReport, Verdict};
use std::fmt::Write as _;

/// 17 significant digits (1 leading + 16 fractional mantissa digits).
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::NotApplicable => "n/a",
    }
}

pub fn mode_str(m: CheckMode) -> &'static str {
    match m {
        CheckMode::ResidualBelow => "residual-below",
        CheckMode::FloorEverywhere => "floor-everywhere",
        CheckMode::FloorSomewhere => "floor-somewhere",
    }
}

fn check_line(out: &mut String, c: &CheckReport) {
    let _ = write!(
        out,
        "check {} verdict {} mode {} worst {} mean {} threshold {} samples {}",
        c.name,
        verdict_str(c.verdict),
        mode_str(c.mode),
        fmt17(c.worst),
        fmt17(c.mean),
        fmt17(c.threshold),
        c.samples,
    );
    if let Some(note) = &c.note {
        let _ = write!(out, " note \"{note}\"");
    }
    out.push('\n');
}

/// Renders one instance report as structured text: a header block, one
/// record per check, and a final result line.
pub fn render_report(scenario: &str, rep: &InstanceReport, samples: usize, seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# kahlerlab verify");
    let _ = writeln!(out, "# scenario {scenario}");
    let _ = writeln!(out, "# instance {}", rep.instance);
    let _ = writeln!(out, "# samples {samples} seed {seed}");
    let _ = writeln!(out, "# classification {}", rep.classification);
    let mut failed = 0usize;
    for c in &rep.checks {
        if c.verdict == Verdict::Fail {
            failed += 1;
        }
        check_line(&mut out, c);
    }
    let _ = writeln!(out, "# checks {} failed {failed}", rep.checks.len());
    let _ = writeln!(out, "# result {}", if rep.passed { "PASSED" } else { "FAILED" });
    out
}

/// Renders the scan table: a comment header, a tab-separated column header
/// (coordinates first, then the requested fields), then one row per point.
pub fn render_scan(
    instance: &str,
    coords: &[&'static str; 4],
    fields: &[String],
    rows: &[([f64; 4], Vec<f64>)],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# kahlerlab scan");
    let _ = writeln!(out, "# instance {instance}");
    let header: Vec<&str> = coords
        .iter()
        .copied()
        .chain(fields.iter().map(|s| s.as_str()))
        .collect();
    let _ = writeln!(out, "{}", header.join("\t"));
    for (p, vals) in rows {
        let cells: Vec<String> = p
            .iter()
            .chain(vals.iter())
            .map(|&x| fmt17(x))
            .collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    out
}

/// Renders the pencil coefficient table with the derived structure flags.
pub fn render_table(a: f64, b: f64, k: f64, eps: f64, coeffs: [f64; 4]) -> String {
    let [a1, a2, a3, a4] = coeffs;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# pencil a {} b {} k {} eps {}",
        fmt17(a),
        fmt17(b),
        k as i64,
        eps as i64
    );
    let _ = writeln!(out, "A1 {}", fmt17(a1));
    let _ = writeln!(out, "A2 {}", fmt17(a2));
    let _ = writeln!(out, "A3 {}", fmt17(a3));
    let _ = writeln!(out, "A4 {}", fmt17(a4));
    let yesno = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(out, "weakly_selfdual {}", yesno(a3 == 0.0));
    let _ = writeln!(out, "selfdual {}", yesno(a3 == 0.0 && a4 == 0.0));
    let _ = writeln!(
        out,
        "bach_flat {}",
        yesno((4.0 * a1 * a4 - a2 * a3).abs() < 1e-12)
    );
    out
}
