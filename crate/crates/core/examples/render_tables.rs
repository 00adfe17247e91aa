//! Renders every table layout from a results file. Without an argument it
//! renders a small hand-made report.
//!
//! `cargo run --example render_tables -- target/planted/results.csv`

use cyberbully_dnn::evaluation::{render_tables, EvalReport, Fold, Layout, MetricRow, RenderOptions, RunKey};

fn demo() -> EvalReport {
    let mut rows = Vec::new();
    for (embedding, base) in [("random", 0.80), ("glove", 0.78), ("sswe", 0.76)] {
        for arch in ["CNN", "LSTM", "BLSTM", "BLSTM_ATTN"] {
            for oversampled in [false, true] {
                let f1 = base + if oversampled { 0.12 } else { 0.0 };
                rows.push(MetricRow {
                    key: RunKey {
                        dataset: "F".into(),
                        oversampled,
                        architecture: arch.into(),
                        embedding: embedding.into(),
                    },
                    transfer: None,
                    class: "bully".into(),
                    fold: Fold::Mean,
                    precision: f1 + 0.01,
                    recall: f1 - 0.01,
                    f1,
                    seed: 42,
                    mode: "strict".into(),
                });
            }
        }
    }
    EvalReport { rows }
}

fn main() -> cyberbully_dnn::Result<()> {
    let report = match std::env::args().nth(1) {
        Some(path) => {
            let file = std::fs::File::open(&path).map_err(|e| cyberbully_dnn::Error::io(&path, e))?;
            EvalReport::read_csv(file)?
        }
        None => demo(),
    };
    let options = RenderOptions::default();
    for layout in Layout::ALL {
        let table = render_tables(std::slice::from_ref(&report), layout, &options);
        println!("{}\n", table.to_markdown());
    }
    Ok(())
}
