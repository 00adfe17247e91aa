//! Builds an embedding matrix from a GloVe-format text file. Pass a path to use
//! real vectors; otherwise a tiny file is written to a temporary directory.
//!
//! `cargo run --example glove_loading -- glove.twitter.27B.50d.txt 50`

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cyberbully_dnn::embeddings::{load_pretrained, RowSource};
use cyberbully_dnn::text::{preprocess, Vocabulary};

fn main() -> cyberbully_dnn::Result<()> {
    let mut args = std::env::args().skip(1);
    let (path, dim) = match (args.next(), args.next()) {
        (Some(p), Some(d)) => (PathBuf::from(p), d.parse().expect("dimension")),
        _ => {
            let path = std::env::temp_dir().join("cbd-example-vectors.txt");
            std::fs::write(
                &path,
                "dumb 0.1 0.2 0.3 0.4\nloser -0.5 0.1 0.0 0.2\nnobody 0.3 0.3 -0.1 0.0\nhappy 0.9 0.1 0.1 0.1\n",
            )
            .map_err(|e| cyberbully_dnn::Error::io(&path, e))?;
            (path, 4)
        }
    };

    let posts: Vec<Vec<String>> = ["you are so dumb", "go away loser", "nobody asked weirdo"]
        .iter()
        .map(|p| preprocess(p))
        .collect();
    let vocab = Vocabulary::build(&posts, None);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let loaded = load_pretrained(&path, &vocab, dim, &mut rng)?;
    println!(
        "{} rows x {} dims, coverage {:.0}%, file sha256 {}",
        loaded.matrix.rows(),
        loaded.matrix.dim(),
        100.0 * loaded.coverage,
        &loaded.file_checksum[..12]
    );
    for (i, token) in vocab.tokens().iter().enumerate() {
        let source = match loaded.matrix.sources[i] {
            RowSource::Pretrained => "pretrained",
            RowSource::Random => "random",
        };
        let row = loaded.matrix.table.row(i);
        println!("  {token:<10} {source:<10} {:?}", &row[..row.len().min(4)]);
    }
    Ok(())
}
