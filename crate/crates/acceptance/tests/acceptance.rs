//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Optional arguments select criteria by number, e.g.
//! `cargo test --test acceptance -- 1 4`.

use std::process::ExitCode;

use reset_ldp::verify::{self, VerifyConfig, CRITERION_COUNT, LAW_CRITERIA};
use reset_ldp_suite::{placeholder_law, suite_law};

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |id: u32| selected.is_empty() || selected.contains(&id);
    let needs_law = LAW_CRITERIA.iter().any(|&i| want(i));
    let cfg = VerifyConfig::new(if needs_law { suite_law() } else { placeholder_law() });

    let mut failures = 0;
    for id in (1..=CRITERION_COUNT).filter(|&id| want(id)) {
        let r = verify::run_criterion(id, &cfg).expect("criterion id in range");
        println!("{}", r.line());
        for d in &r.details {
            println!("       {d}");
        }
        if !r.passed {
            failures += 1;
        }
    }
    println!("acceptance: {failures} criteria failed");
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
