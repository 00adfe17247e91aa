//! Trains every architecture on a synthetic corpus whose positive posts carry a
//! planted token, with 5-fold cross-validation.

use cyberbully_dnn::datasets::{CvProtocol, SplitMode};
use cyberbully_dnn::evaluation::precision_recall_f1;
use cyberbully_dnn::models::{Architecture, Hyperparams};
use cyberbully_dnn::pipeline::{cross_validate, FitSpec};
use cyberbully_dnn::synthetic::{planted_corpus, SyntheticSpec};

fn main() -> cyberbully_dnn::Result<()> {
    let corpus = planted_corpus(&SyntheticSpec::default(), 7)?;
    println!("{} posts, class counts {:?}", corpus.len(), corpus.class_counts());
    for p in corpus.posts.iter().take(3) {
        println!("  [{}] {}", corpus.classes[p.label], p.text);
    }

    let mut hyper = Hyperparams {
        embedding_dim: 16,
        epochs: 20,
        batch_size: 8,
        ..Hyperparams::default()
    };
    hyper.geometry.hidden = 16;
    hyper.geometry.filters = 32;
    hyper.adam.learning_rate = 0.005;

    let protocol = CvProtocol {
        k: 5,
        seed: 7,
        stratified: true,
        mode: SplitMode::Strict,
        oversampling: None,
    };
    for arch in Architecture::ALL {
        let spec = FitSpec::new(arch, hyper.clone());
        let out = cross_validate(&corpus, &protocol, &spec, 1, None)?;
        let f1: Vec<f64> = out.folds.iter().map(|m| precision_recall_f1(m, 1).f1).collect();
        let last_loss = out.histories[0].epoch_loss.last().copied().unwrap_or(f64::NAN);
        println!(
            "{arch:<10} bully F1 per fold {:?}  mean {:.3}  final loss (fold 0) {last_loss:.4}",
            f1.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>(),
            f1.iter().sum::<f64>() / f1.len() as f64
        );
    }
    Ok(())
}
