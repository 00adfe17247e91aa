//! Complete, feature-level and model-level transfer from one synthetic platform
//! to another.

use cyberbully_dnn::datasets::{CvProtocol, SplitMode};
use cyberbully_dnn::evaluation::{precision_recall_f1, ConfusionMatrix};
use cyberbully_dnn::models::{Architecture, Hyperparams};
use cyberbully_dnn::pipeline::{fit, FitSpec};
use cyberbully_dnn::synthetic::transfer_pair;
use cyberbully_dnn::transfer::{merge_report, transfer_complete, transfer_trained, Approach};

fn mean_f1(folds: &[ConfusionMatrix]) -> f64 {
    folds.iter().map(|m| precision_recall_f1(m, 1).f1).sum::<f64>() / folds.len() as f64
}

fn main() -> cyberbully_dnn::Result<()> {
    let (source_corpus, target) = transfer_pair(200, 11)?;
    let mut hyper = Hyperparams {
        embedding_dim: 16,
        epochs: 20,
        batch_size: 8,
        ..Hyperparams::default()
    };
    hyper.geometry.hidden = 16;
    hyper.adam.learning_rate = 0.005;
    let spec = FitSpec::new(Architecture::BlstmAttn, hyper);
    let protocol = CvProtocol {
        k: 5,
        seed: 11,
        stratified: true,
        mode: SplitMode::Strict,
        oversampling: None,
    };

    let (source, history) = fit(&source_corpus, &spec, 1)?;
    println!("source trained in {:.1}s", history.seconds);
    let merge = merge_report(&source, &target, &protocol, &spec)?;
    println!(
        "vocabulary: {} shared, {} target-only, {} source-only",
        merge.shared, merge.target_only, merge.source_only
    );

    let complete = transfer_complete(&source, &target, &protocol, &spec.preprocessor, "none")?;
    println!("{:<8} target bully F1 {:.3}", Approach::Complete, mean_f1(&complete));
    for approach in [Approach::Feature, Approach::Model] {
        let out = transfer_trained(approach, &source, &target, &protocol, &spec, 2, "none")?;
        println!("{approach:<8} target bully F1 {:.3}", mean_f1(&out.folds));
    }
    Ok(())
}
