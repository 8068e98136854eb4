//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. `ACCEPTANCE_VERBOSE=1` prints every comparison.

use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    let start = Instant::now();
    let outcomes = qgeom::check::run(&[]);
    println!();
    for o in &outcomes {
        println!("{o}");
        for d in o.details.iter().filter(|d| verbose || d.starts_with("FAIL")) {
            println!("    {d}");
        }
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed}/{} criteria passed in {:.1} s", outcomes.len(), start.elapsed().as_secs_f64());
    if passed == outcomes.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
