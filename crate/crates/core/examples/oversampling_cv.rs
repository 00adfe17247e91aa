//! Oversampling the minority class and what it does to fold boundaries in the
//! two split modes.

use std::collections::HashSet;

use cyberbully_dnn::datasets::{oversample, CvProtocol, Oversampling, SplitMode};
use cyberbully_dnn::synthetic::{planted_corpus, SyntheticSpec};

fn main() -> cyberbully_dnn::Result<()> {
    let spec = SyntheticSpec {
        posts: 100,
        positive_rate: 0.1,
        ..SyntheticSpec::default()
    };
    let corpus = planted_corpus(&spec, 3)?;
    let tripled = oversample(&corpus, "bully", 3)?;
    println!("original    {:?}", corpus.class_counts());
    println!("oversampled {:?}", tripled.class_counts());

    for mode in [SplitMode::Strict, SplitMode::Fidelity] {
        let protocol = CvProtocol {
            k: 5,
            seed: 3,
            stratified: true,
            mode,
            oversampling: Some(Oversampling {
                classes: vec!["bully".into()],
                factor: 3,
            }),
        };
        let plan = protocol.plan(&corpus)?;
        println!("\n{mode:?}");
        for fold in 0..plan.k {
            let (train, test) = protocol.fold_data(&corpus, &plan, fold)?;
            let parents: HashSet<&str> = train.posts.iter().map(|p| p.parent.as_str()).collect();
            let leaked = test.posts.iter().filter(|p| parents.contains(p.parent.as_str())).count();
            println!(
                "  fold {fold}: train {:?} test {:?}  test posts with a copy in train: {leaked}",
                train.class_counts(),
                test.class_counts()
            );
        }
    }
    Ok(())
}
