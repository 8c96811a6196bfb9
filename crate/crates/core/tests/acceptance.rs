//! Acceptance suite: the ten numbered criteria at their stated tolerances
//! and wall-clock budgets. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::io::Write;
use std::process::ExitCode;

use hypersurf::verify::{run_check, VerifyOptions, CHECK_COUNT};

fn main() -> ExitCode {
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let opts = VerifyOptions::default();
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for id in (1..=CHECK_COUNT).filter(|i| filter.is_empty() || filter.contains(i)) {
        let r = run_check(id, &opts);
        let in_budget = r.seconds < r.budget_seconds;
        let ok = r.pass && in_budget;
        if !ok {
            failed += 1;
        }
        writeln!(
            out,
            "{} criterion {:>2} {:<26} margin {:>10.3e}  {:>6.2}s / {:>2}s  {}{}",
            if ok { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.margin,
            r.seconds,
            r.budget_seconds,
            r.detail,
            if in_budget { "" } else { "  [over time budget]" }
        )
        .expect("stdout");
    }
    writeln!(out, "acceptance: {failed} failed").expect("stdout");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
