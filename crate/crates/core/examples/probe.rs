//! Run the full check suite on one named catalog instance and print every
//! check line.  Usage: `cargo run --example probe -- <instance> [samples]`.

use kahlerlab::families::catalog;
use kahlerlab::verify::{verify_instance, ToleranceConfig, Verdict};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| {
        eprintln!("available instances:");
        for n in catalog::names() {
            eprintln!("  {n}");
        }
        std::process::exit(2);
    });
    let samples: usize = args
        .next()
        .map(|s| s.parse().expect("sample count"))
        .unwrap_or(20);
    let inst = catalog::builtin(&name).unwrap_or_else(|_| {
        eprintln!("unknown instance {name}");
        std::process::exit(2);
    });
    let cfg = ToleranceConfig {
        samples_per_box: samples,
        ..Default::default()
    };
    match verify_instance(&inst, &cfg) {
        Ok(report) => {
            println!("# {} -> {}", report.instance, report.classification);
            for c in &report.checks {
                let tag = match c.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "FAIL",
                    Verdict::NotApplicable => "n/a ",
                };
                println!(
                    "{tag}  {:<38} worst {:>12.5e}  mean {:>12.5e}  thr {:>9.1e}  ({:?}) {}",
                    c.name,
                    c.worst,
                    c.mean,
                    c.threshold,
                    c.mode,
                    c.note.as_deref().unwrap_or("")
                );
            }
            println!(
                "=> {}",
                if report.passed { "PASSED" } else { "FAILED" }
            );
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
