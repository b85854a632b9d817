//! Acceptance criteria, one line per criterion. Runs the full suite
//! (catalysis included); `ACCEPTANCE_SEED` overrides the default seed.

use std::process::ExitCode;

use coherdist::acceptance::{run_suite, Suite, DEFAULT_SEED};

fn main() -> ExitCode {
    let seed = std::env::var("ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    println!("acceptance suite, seed {seed}");
    let report = run_suite(Suite::Full, seed, &mut |check| println!("{check}"));
    println!("{}", report.summary());
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
