//! Corpus ingestion, minority-class oversampling and stratified k-fold splitting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator between a parent id and the replica number of an oversampled copy.
pub const REPLICA_SEPARATOR: &str = "#rep";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    /// Id of the original post; equals `id` for originals.
    pub parent: String,
    pub text: String,
    /// Index into [`LabeledCorpus::classes`].
    pub label: usize,
    /// Unmapped CSV columns, carried through untouched.
    pub extra: BTreeMap<String, String>,
}

impl Post {
    pub fn is_replica(&self) -> bool {
        self.id != self.parent
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub posts: Vec<Post>,
    pub classes: Vec<String>,
    pub platform: String,
}

/// Column mapping for [`load_corpus`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// When absent, ids are synthesised from the 1-based data row number.
    pub id_column: Option<String>,
    pub text_column: String,
    pub label_column: String,
    pub classes: Vec<String>,
    pub platform: String,
}

impl CsvSchema {
    pub fn new(classes: &[&str]) -> Self {
        Self {
            id_column: Some("id".into()),
            text_column: "text".into(),
            label_column: "label".into(),
            classes: classes.iter().map(|c| c.to_string()).collect(),
            platform: String::new(),
        }
    }
}

impl LabeledCorpus {
    pub fn new(posts: Vec<Post>, classes: Vec<String>, platform: impl Into<String>) -> Result<Self> {
        let corpus = Self {
            posts,
            classes,
            platform: platform.into(),
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.len() < 2 {
            return Err(Error::Corpus("class set needs at least two classes".into()));
        }
        let mut seen = HashSet::new();
        for p in &self.posts {
            if p.label >= self.classes.len() {
                return Err(Error::Corpus(format!("post `{}` has label index {}", p.id, p.label)));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(Error::Corpus(format!("duplicate post id `{}`", p.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn class_index(&self, name: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Config(format!("class `{name}` not in {:?}", self.classes)))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for p in &self.posts {
            counts[p.label] += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<usize> {
        self.posts.iter().map(|p| p.label).collect()
    }

    /// Posts whose ids are in `ids`, in corpus order.
    pub fn subset(&self, ids: &HashSet<&str>) -> LabeledCorpus {
        LabeledCorpus {
            posts: self
                .posts
                .iter()
                .filter(|p| ids.contains(p.id.as_str()))
                .cloned()
                .collect(),
            classes: self.classes.clone(),
            platform: self.platform.clone(),
        }
    }

    /// Writes the corpus in the format [`load_corpus`] reads with
    /// [`CsvSchema::new`]-style columns (`id,text,label`, then extra columns).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let extra_cols: Vec<String> = self
            .posts
            .iter()
            .flat_map(|p| p.extra.keys().cloned())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["id".to_owned(), "text".to_owned(), "label".to_owned()];
        header.extend(extra_cols.iter().cloned());
        w.write_record(&header)?;
        for p in &self.posts {
            let mut rec = vec![p.id.clone(), p.text.clone(), self.classes[p.label].clone()];
            rec.extend(extra_cols.iter().map(|c| p.extra.get(c).cloned().unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Reads a headered UTF-8 CSV. Every label must be one of `schema.classes`.
pub fn load_corpus(path: &Path, schema: &CsvSchema) -> Result<LabeledCorpus> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Corpus(format!("{}: missing column `{name}`", path.display())))
    };
    let text_col = column(&schema.text_column)?;
    let label_col = column(&schema.label_column)?;
    let id_col = schema.id_column.as_deref().map(column).transpose()?;
    let class_index: HashMap<&str, usize> = schema
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut posts = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let row = row + 1;
        let label_raw = record.get(label_col).unwrap_or("").trim();
        let label = *class_index.get(label_raw).ok_or_else(|| {
            Error::Corpus(format!(
                "{}: row {row}: unknown label `{label_raw}` (classes {:?})",
                path.display(),
                schema.classes
            ))
        })?;
        let id = match id_col {
            Some(c) => record.get(c).unwrap_or("").to_owned(),
            None => row.to_string(),
        };
        let mut extra = BTreeMap::new();
        for (i, (h, v)) in headers.iter().zip(record.iter()).enumerate() {
            if i != text_col && i != label_col && Some(i) != id_col {
                extra.insert(h.to_owned(), v.to_owned());
            }
        }
        posts.push(Post {
            parent: id.clone(),
            id,
            text: record.get(text_col).unwrap_or("").to_owned(),
            label,
            extra,
        });
    }
    LabeledCorpus::new(posts, schema.classes.clone(), schema.platform.clone())
}

/// Every post of `target_class` appears `factor` times: the original in place plus
/// `factor − 1` replicas appended after all originals, grouped by parent.
pub fn oversample(corpus: &LabeledCorpus, target_class: &str, factor: usize) -> Result<LabeledCorpus> {
    let idx = corpus.class_index(target_class)?;
    oversample_classes(corpus, &[idx], factor)
}

pub fn oversample_classes(corpus: &LabeledCorpus, classes: &[usize], factor: usize) -> Result<LabeledCorpus> {
    if factor == 0 {
        return Err(Error::Config("oversampling factor must be at least 1".into()));
    }
    let mut posts = corpus.posts.clone();
    for p in &corpus.posts {
        if classes.contains(&p.label) && !p.is_replica() {
            for r in 1..factor {
                posts.push(Post {
                    id: format!("{}{REPLICA_SEPARATOR}{r}", p.id),
                    ..p.clone()
                });
            }
        }
    }
    Ok(LabeledCorpus {
        posts,
        classes: corpus.classes.clone(),
        platform: corpus.platform.clone(),
    })
}

/// Whether oversampling happens after the train/test split (no leakage) or on the
/// whole corpus before it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    #[default]
    Strict,
    Fidelity,
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Strict => "strict",
            SplitMode::Fidelity => "fidelity",
        })
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(SplitMode::Strict),
            "fidelity" => Ok(SplitMode::Fidelity),
            _ => Err(Error::Config(format!("unknown mode `{s}` (strict|fidelity)"))),
        }
    }
}

/// Assignment of post ids to folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub mode: SplitMode,
    /// Ids per fold, each list in corpus order.
    pub folds: Vec<Vec<String>>,
}

impl FoldPlan {
    pub fn fold_of(&self) -> HashMap<&str, usize> {
        self.folds
            .iter()
            .enumerate()
            .flat_map(|(f, ids)| ids.iter().map(move |id| (id.as_str(), f)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Seeded k-fold assignment. In stratified mode each class's shuffled members are
/// dealt round-robin, continuing the rotation across classes, so per-class and
/// per-fold totals both differ by at most one.
pub fn kfold_split(corpus: &LabeledCorpus, k: usize, seed: u64, stratified: bool) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if corpus.len() < k {
        return Err(Error::Config(format!("{} posts cannot fill {k} folds", corpus.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = Vec::with_capacity(corpus.len());
    if stratified {
        let counts = corpus.class_counts();
        if let Some((c, n)) = counts.iter().enumerate().find(|(_, &n)| n < k) {
            return Err(Error::Config(format!(
                "class `{}` has {n} posts, fewer than k = {k}",
                corpus.classes[c]
            )));
        }
        for class in 0..corpus.classes.len() {
            let mut members: Vec<usize> = (0..corpus.len())
                .filter(|&i| corpus.posts[i].label == class)
                .collect();
            members.shuffle(&mut rng);
            order.extend(members);
        }
    } else {
        order.extend(0..corpus.len());
        order.shuffle(&mut rng);
    }
    let mut fold_of = vec![0usize; corpus.len()];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    let mut folds = vec![Vec::new(); k];
    for (i, p) in corpus.posts.iter().enumerate() {
        folds[fold_of[i]].push(p.id.clone());
    }
    Ok(FoldPlan {
        k,
        seed,
        stratified,
        mode: SplitMode::Strict,
        folds,
    })
}

/// Which classes to replicate, and how often.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Oversampling {
    pub classes: Vec<String>,
    pub factor: usize,
}

/// How one dataset is cut into cross-validation folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvProtocol {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub mode: SplitMode,
    pub oversampling: Option<Oversampling>,
}

impl CvProtocol {
    fn oversampled(&self, corpus: &LabeledCorpus) -> Result<LabeledCorpus> {
        match &self.oversampling {
            None => Ok(corpus.clone()),
            Some(o) => {
                let idx = o
                    .classes
                    .iter()
                    .map(|c| corpus.class_index(c))
                    .collect::<Result<Vec<_>>>()?;
                oversample_classes(corpus, &idx, o.factor)
            }
        }
    }

    /// Fold plan over original posts (strict) or over the oversampled corpus
    /// (fidelity).
    pub fn plan(&self, corpus: &LabeledCorpus) -> Result<FoldPlan> {
        let base = match self.mode {
            SplitMode::Strict => corpus.clone(),
            SplitMode::Fidelity => self.oversampled(corpus)?,
        };
        let mut plan = kfold_split(&base, self.k, self.seed, self.stratified)?;
        plan.mode = self.mode;
        Ok(plan)
    }

    /// Materialises `(train, test)` for one fold.
    ///
    /// Strict: split the original posts, then oversample inside the training part.
    /// Fidelity: oversample everything, then split, so replicas of one post can sit
    /// on both sides.
    pub fn fold_data(
        &self,
        corpus: &LabeledCorpus,
        plan: &FoldPlan,
        test_fold: usize,
    ) -> Result<(LabeledCorpus, LabeledCorpus)> {
        if test_fold >= plan.k {
            return Err(Error::Config(format!("test fold {test_fold} outside 0..{}", plan.k)));
        }
        if plan.mode != self.mode {
            return Err(Error::Config(format!(
                "fold plan was made for {} mode, protocol is {}",
                plan.mode, self.mode
            )));
        }
        let base = match self.mode {
            SplitMode::Strict => corpus.clone(),
            SplitMode::Fidelity => self.oversampled(corpus)?,
        };
        let fold_of = plan.fold_of();
        if let Some(p) = base.posts.iter().find(|p| !fold_of.contains_key(p.id.as_str())) {
            return Err(Error::Config(format!("post `{}` is not covered by the fold plan", p.id)));
        }
        let test_ids: HashSet<&str> = plan.folds[test_fold].iter().map(String::as_str).collect();
        let train_ids: HashSet<&str> = base
            .posts
            .iter()
            .map(|p| p.id.as_str())
            .filter(|id| !test_ids.contains(id))
            .collect();
        let test = base.subset(&test_ids);
        let train = base.subset(&train_ids);
        let train = match self.mode {
            SplitMode::Strict => self.oversampled(&train)?,
            SplitMode::Fidelity => train,
        };
        Ok((train, test))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(labels: &[usize]) -> LabeledCorpus {
        let posts = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| Post {
                id: format!("p{i}"),
                parent: format!("p{i}"),
                text: format!("text {i}"),
                label: l,
                extra: BTreeMap::new(),
            })
            .collect();
        LabeledCorpus::new(posts, vec!["none".into(), "bully".into()], "toy").unwrap()
    }

    #[test]
    fn factor_one_is_identity() {
        let c = corpus(&[0, 1, 0, 1]);
        assert_eq!(oversample(&c, "bully", 1).unwrap(), c);
    }

    #[test]
    fn tripling_counts_and_ids() {
        let c = corpus(&[1, 0, 0, 1, 0, 0, 0]);
        let o = oversample(&c, "bully", 3).unwrap();
        assert_eq!(o.class_counts(), vec![5, 6]);
        let replica_ids: Vec<&str> = o.posts[7..].iter().map(|p| p.id.as_str()).collect();
        assert_eq!(replica_ids, ["p0#rep1", "p0#rep2", "p3#rep1", "p3#rep2"]);
        assert!(o.posts[7..].iter().all(|p| p.is_replica()));
        o.validate().unwrap();
    }

    #[test]
    fn unknown_class_is_rejected() {
        let c = corpus(&[0, 1]);
        assert!(oversample(&c, "racism", 3).is_err());
    }

    #[test]
    fn even_split() {
        let c = corpus(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let plan = kfold_split(&c, 5, 1, true).unwrap();
        assert!(plan.folds.iter().all(|f| f.len() == 2));
    }

    #[test]
    fn stratified_balance() {
        let mut labels = vec![1; 7];
        labels.extend(vec![0; 13]);
        let c = corpus(&labels);
        for seed in 0..20 {
            let plan = kfold_split(&c, 5, seed, true).unwrap();
            let fold_of = plan.fold_of();
            let mut bully = [0; 5];
            let mut none = [0; 5];
            for p in &c.posts {
                let f = fold_of[p.id.as_str()];
                if p.label == 1 { bully[f] += 1 } else { none[f] += 1 }
            }
            assert!(bully.iter().all(|&n| n == 1 || n == 2), "{bully:?}");
            assert!(none.iter().all(|&n| n == 2 || n == 3), "{none:?}");
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let c = corpus(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 0]);
        assert_eq!(kfold_split(&c, 2, 7, true).unwrap(), kfold_split(&c, 2, 7, true).unwrap());
        assert_ne!(kfold_split(&c, 2, 7, true).unwrap(), kfold_split(&c, 2, 8, true).unwrap());
    }

    #[test]
    fn small_class_fails_stratified() {
        let c = corpus(&[1, 0, 0, 0, 0, 0]);
        assert!(kfold_split(&c, 2, 0, true).is_err());
        assert!(kfold_split(&c, 2, 0, false).is_ok());
    }

    #[test]
    fn fold_plan_json_round_trip() {
        let c = corpus(&[0, 1, 0, 1]);
        let plan = kfold_split(&c, 2, 3, true).unwrap();
        let back: FoldPlan = serde_json::from_str(&plan.to_json().unwrap()).unwrap();
        assert_eq!(back, plan);
    }

    fn protocol(mode: SplitMode, k: usize) -> CvProtocol {
        CvProtocol {
            k,
            seed: 11,
            stratified: true,
            mode,
            oversampling: Some(Oversampling {
                classes: vec!["bully".into()],
                factor: 3,
            }),
        }
    }

    #[test]
    fn strict_mode_never_leaks() {
        let mut labels = vec![1; 10];
        labels.extend(vec![0; 30]);
        let c = corpus(&labels);
        let proto = protocol(SplitMode::Strict, 5);
        let plan = proto.plan(&c).unwrap();
        for fold in 0..5 {
            let (train, test) = proto.fold_data(&c, &plan, fold).unwrap();
            let parents: HashSet<&str> = train.posts.iter().map(|p| p.parent.as_str()).collect();
            assert!(test.posts.iter().all(|p| !parents.contains(p.parent.as_str())));
            assert!(test.posts.iter().all(|p| !p.is_replica()));
            assert_eq!(test.class_counts()[1], 2);
            assert_eq!(train.class_counts()[1], 8 * 3);
        }
    }

    #[test]
    fn fidelity_mode_leaks_on_toy_corpus() {
        let c = corpus(&[1, 0, 0, 0, 0]);
        let proto = protocol(SplitMode::Fidelity, 2);
        let plan = proto.plan(&c).unwrap();
        let (train, test) = proto.fold_data(&c, &plan, 0).unwrap();
        let parents: HashSet<&str> = train.posts.iter().map(|p| p.parent.as_str()).collect();
        assert!(test.posts.iter().any(|p| parents.contains(p.parent.as_str())));
    }

    #[test]
    fn plan_mode_must_match_protocol() {
        let c = corpus(&[1, 1, 0, 0]);
        let strict = protocol(SplitMode::Strict, 2);
        let plan = strict.plan(&c).unwrap();
        assert!(protocol(SplitMode::Fidelity, 2).fold_data(&c, &plan, 0).is_err());
    }
}
