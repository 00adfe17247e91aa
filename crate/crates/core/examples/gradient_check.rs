//! Finite-difference gradient checks for every layer and architecture.
//!
//! `cargo run --example gradient_check -- 5`

use cyberbully_dnn::verification::{run_suite, TOLERANCE};

fn main() -> cyberbully_dnn::Result<()> {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let outcomes = run_suite(seeds)?;
    for o in &outcomes {
        println!(
            "{:<24} seed {:>2}  max rel error {:.2e}  ({} elements, worst {})",
            o.name, o.seed, o.report.max_rel_error, o.report.elements, o.report.worst
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    println!("{failed} of {} checks above {TOLERANCE:e}", outcomes.len());
    Ok(())
}
