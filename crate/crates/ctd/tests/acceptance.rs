use std::process::ExitCode;

use ctd::acceptance::{run_suite, SuiteOptions, ALL_CRITERIA};

fn main() -> ExitCode {
    let verdict = run_suite(&ALL_CRITERIA, &SuiteOptions::default());
    if let Err(e) = &verdict.precondition {
        println!("precondition FAIL: {e}");
    }
    for r in &verdict.results {
        println!("{}", r.line());
    }
    let passed = verdict.passed();
    println!("acceptance suite: {}", if passed { "all gating criteria pass" } else { "FAILED" });
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
