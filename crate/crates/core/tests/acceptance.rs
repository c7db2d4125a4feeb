//! Full acceptance battery. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;

use ge_aloha::verify::{run_criterion, Budget};

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for id in 1..=10 {
        let report = run_criterion(id, Budget::Full);
        println!("{report}");
        if !report.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
