//! Runs a whole experiment grid from a TOML config: cross-validation cells,
//! transfer, significance tests and rendered tables.
//!
//! `cargo run --release --example full_experiment -- configs/planted.toml`

use std::path::PathBuf;

use cyberbully_dnn::experiment::{run_experiment, validate_config, Overrides};

fn main() -> cyberbully_dnn::Result<()> {
    env_logger::init();
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/planted.toml")));
    let config = validate_config(&path, &Overrides::default())?;
    let summary = run_experiment(&config)?;
    println!(
        "{} cells, {} failures, results in {}",
        summary.cells,
        summary.failures.len(),
        summary.output_dir.display()
    );
    for row in summary.report.rows.iter().filter(|r| r.class != "none") {
        if row.fold == cyberbully_dnn::evaluation::Fold::Mean && row.transfer.is_none() {
            println!("  {:<4} {:<10} {:<8} {:<8} F1 {:.3}", row.key.dataset_label(), row.key.architecture, row.key.embedding, row.class, row.f1);
        }
    }
    Ok(())
}
