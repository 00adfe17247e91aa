//! Experiment configuration (TOML).
//!
//! ```toml
//! output_dir = "out"
//! seed = 42
//! architectures = ["CNN", "BLSTM_ATTN"]
//!
//! [[datasets]]
//! name = "F"
//! path = "formspring.csv"
//! classes = ["none", "bully"]
//!
//! [[embeddings]]
//! name = "glove"
//! path = "glove.6B.{dim}d.txt"
//! ```
//!
//! Relative paths resolve against the config file's directory. `{dim}` in an
//! embedding path is replaced by each entry of `dimensions`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::{CsvSchema, SplitMode};
use crate::error::{Error, Result};
use crate::evaluation::tables::Layout;
use crate::models::network::Architecture;
use crate::synthetic::SyntheticSpec;
use crate::transfer::Approach;

fn default_seed() -> u64 {
    42
}
fn default_k() -> usize {
    5
}
fn default_true() -> bool {
    true
}
fn default_factor() -> usize {
    3
}
fn default_dimensions() -> Vec<usize> {
    vec![50]
}
fn default_oversampled() -> Vec<bool> {
    vec![false, true]
}
fn default_architectures() -> Vec<String> {
    Architecture::ALL.iter().map(|a| a.as_str().to_owned()).collect()
}
fn default_negative() -> String {
    "none".into()
}
fn default_embeddings() -> Vec<EmbeddingConfig> {
    vec![EmbeddingConfig { name: "random".into(), path: None }]
}
fn default_mode() -> String {
    "strict".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub filters: usize,
    pub kernel_width: usize,
    pub dropout_embedding: f64,
    pub dropout_hidden: f64,
    pub vocab_cap: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 128,
            learning_rate: 0.001,
            hidden: 64,
            filters: 128,
            kernel_width: 3,
            dropout_embedding: 0.25,
            dropout_hidden: 0.5,
            vocab_cap: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub posts: usize,
    pub positive_rate: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Short tag used in result rows (`F`, `T`, `W`, `Y`, ...).
    pub name: String,
    pub path: Option<PathBuf>,
    /// A generated planted-signal corpus instead of a file.
    pub synthetic: Option<SyntheticConfig>,
    pub id_column: Option<String>,
    #[serde(default = "text_column")]
    pub text_column: String,
    #[serde(default = "label_column")]
    pub label_column: String,
    #[serde(default)]
    pub classes: Vec<String>,
    /// Classes to replicate; defaults to every class but the negative one.
    pub oversample_classes: Option<Vec<String>>,
    pub platform: Option<String>,
}

fn text_column() -> String {
    "text".into()
}
fn label_column() -> String {
    "label".into()
}

impl DatasetConfig {
    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            id_column: self.id_column.clone(),
            text_column: self.text_column.clone(),
            label_column: self.label_column.clone(),
            classes: self.classes.clone(),
            platform: self.platform.clone().unwrap_or_else(|| self.name.clone()),
        }
    }

    pub fn synthetic_spec(&self) -> Option<(SyntheticSpec, u64)> {
        self.synthetic.as_ref().map(|s| {
            (
                SyntheticSpec {
                    posts: s.posts,
                    positive_rate: s.positive_rate,
                    platform: self.platform.clone().unwrap_or_else(|| self.name.clone()),
                    ..SyntheticSpec::default()
                },
                s.seed,
            )
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// `random` for random initialisation; any other name needs a `path`.
    pub name: String,
    pub path: Option<PathBuf>,
}

impl EmbeddingConfig {
    pub fn is_random(&self) -> bool {
        self.path.is_none()
    }

    pub fn path_for(&self, dim: usize) -> Option<PathBuf> {
        self.path
            .as_ref()
            .map(|p| PathBuf::from(p.to_string_lossy().replace("{dim}", &dim.to_string())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub source: String,
    #[serde(default = "default_true")]
    pub source_oversampled: bool,
    pub target: String,
    #[serde(default)]
    pub target_oversampled: bool,
    #[serde(default = "attn")]
    pub architecture: String,
    #[serde(default = "random")]
    pub embedding: String,
    /// Embedding dimension of the source model; defaults to the first sweep entry.
    pub dimension: Option<usize>,
    #[serde(default = "all_approaches")]
    pub approaches: Vec<String>,
}

fn attn() -> String {
    "BLSTM_ATTN".into()
}
fn random() -> String {
    "random".into()
}
fn all_approaches() -> Vec<String> {
    Approach::ALL.iter().map(|a| a.as_str().to_owned()).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesConfig {
    /// Embedding used by table3a and table5; defaults to `sswe` when configured,
    /// else the first embedding.
    pub focus_embedding: Option<String>,
    /// Dataset restriction per layout, e.g. `table4 = ["Y"]`.
    #[serde(default)]
    pub datasets: BTreeMap<String, Vec<String>>,
}

/// The normalised configuration. Every field has its default filled in, and
/// paths are absolute after [`validate_config`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_true")]
    pub stratified: bool,
    #[serde(default = "default_factor")]
    pub oversample_factor: usize,
    #[serde(default = "default_oversampled")]
    pub oversampled: Vec<bool>,
    #[serde(default = "default_architectures")]
    pub architectures: Vec<String>,
    #[serde(default = "default_dimensions")]
    pub dimensions: Vec<usize>,
    #[serde(default = "default_embeddings")]
    pub embeddings: Vec<EmbeddingConfig>,
    #[serde(default = "default_negative")]
    pub negative_class: String,
    pub stopwords: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    pub jobs: Option<usize>,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub datasets: Vec<DatasetConfig>,
    #[serde(default)]
    pub transfer: Vec<TransferConfig>,
    #[serde(default)]
    pub tables: TablesConfig,
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<SplitMode>,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Validation(vec![e.to_string()]))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    /// SHA-256 of the normalised TOML.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn split_mode(&self) -> SplitMode {
        self.mode.parse().unwrap_or_default()
    }

    pub fn architecture_list(&self) -> Vec<Architecture> {
        self.architectures.iter().filter_map(|a| a.parse().ok()).collect()
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.mode {
            self.mode = m.to_string();
        }
        if let Some(j) = o.jobs {
            self.jobs = Some(j);
        }
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetConfig> {
        self.datasets.iter().find(|d| d.name == name)
    }

    /// Column label for an embedding at a given dimension.
    pub fn embedding_label(&self, name: &str, dim: usize) -> String {
        if self.dimensions.len() > 1 {
            format!("{name}@d{dim}")
        } else {
            name.to_owned()
        }
    }

    fn resolve(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut self.output_dir);
        if let Some(p) = self.stopwords.as_mut() {
            abs(p);
        }
        for d in &mut self.datasets {
            if let Some(p) = d.path.as_mut() {
                abs(p);
            }
        }
        for e in &mut self.embeddings {
            if let Some(p) = e.path.as_mut() {
                abs(p);
            }
        }
    }

    /// Every violation, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.split_mode_checked().is_none() {
            errs.push(format!("mode: `{}` is not strict or fidelity", self.mode));
        }
        if self.k < 2 {
            errs.push(format!("k: {} folds, need at least 2", self.k));
        }
        if self.oversample_factor < 1 {
            errs.push("oversample_factor: must be at least 1".into());
        }
        if self.oversampled.is_empty() {
            errs.push("oversampled: list is empty".into());
        }
        if self.jobs == Some(0) {
            errs.push("jobs: must be at least 1".into());
        }
        if self.architectures.is_empty() {
            errs.push("architectures: list is empty".into());
        }
        for a in &self.architectures {
            if a.parse::<Architecture>().is_err() {
                errs.push(format!("architectures: unknown architecture `{a}`"));
            }
        }
        if self.dimensions.is_empty() {
            errs.push("dimensions: list is empty".into());
        }
        if self.dimensions.contains(&0) {
            errs.push("dimensions: 0 is not a valid embedding dimension".into());
        }
        let t = &self.training;
        if t.epochs == 0 {
            errs.push("training.epochs: must be at least 1".into());
        }
        if t.batch_size == 0 {
            errs.push("training.batch_size: must be at least 1".into());
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            errs.push(format!("training.learning_rate: {} is not positive", t.learning_rate));
        }
        if t.hidden == 0 || t.filters == 0 || t.kernel_width == 0 {
            errs.push("training: hidden, filters and kernel_width must be positive".into());
        }
        for (field, rate) in [("dropout_embedding", t.dropout_embedding), ("dropout_hidden", t.dropout_hidden)] {
            if !(0.0..1.0).contains(&rate) {
                errs.push(format!("training.{field}: {rate} outside [0, 1)"));
            }
        }
        if let Some(p) = &self.stopwords {
            if !p.is_file() {
                errs.push(format!("stopwords: file {} does not exist", p.display()));
            }
        }
        if self.datasets.is_empty() {
            errs.push("datasets: none configured".into());
        }
        let mut names = Vec::new();
        for (i, d) in self.datasets.iter().enumerate() {
            let at = format!("datasets[{i}] ({})", d.name);
            if d.name.is_empty() || d.name.contains(['/', '+', ',']) {
                errs.push(format!("{at}: name must be non-empty without '/', '+' or ','"));
            }
            if names.contains(&&d.name) {
                errs.push(format!("{at}: duplicate dataset name"));
            }
            names.push(&d.name);
            match (&d.path, &d.synthetic) {
                (Some(p), None) => {
                    if !p.is_file() {
                        errs.push(format!("{at}.path: file {} does not exist", p.display()));
                    }
                    if d.classes.len() < 2 {
                        errs.push(format!("{at}.classes: need at least two classes"));
                    }
                }
                (None, Some(s)) => {
                    if s.posts < 2 || !(0.0..=1.0).contains(&s.positive_rate) {
                        errs.push(format!("{at}.synthetic: need posts >= 2 and positive_rate in [0, 1]"));
                    }
                    if !d.classes.is_empty() && d.classes != ["none", "bully"] {
                        errs.push(format!("{at}.classes: synthetic corpora use [\"none\", \"bully\"]"));
                    }
                }
                _ => errs.push(format!("{at}: give exactly one of `path` and `synthetic`")),
            }
            let classes = self.classes_of(d);
            let mut sorted = classes.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != classes.len() {
                errs.push(format!("{at}.classes: duplicate class"));
            }
            if let Some(over) = &d.oversample_classes {
                for c in over {
                    if !classes.contains(c) {
                        errs.push(format!("{at}.oversample_classes: `{c}` is not a class"));
                    }
                }
            }
        }
        let mut enames = Vec::new();
        for (i, e) in self.embeddings.iter().enumerate() {
            let at = format!("embeddings[{i}] ({})", e.name);
            if e.name.is_empty() || e.name.contains(['@', ',', '/']) {
                errs.push(format!("{at}: name must be non-empty without '@', ',' or '/'"));
            }
            if enames.contains(&&e.name) {
                errs.push(format!("{at}: duplicate embedding name"));
            }
            enames.push(&e.name);
            if e.is_random() && e.name != "random" {
                errs.push(format!("{at}: a pretrained embedding needs `path`"));
            }
            for &dim in &self.dimensions {
                if let Some(p) = e.path_for(dim) {
                    if !p.is_file() {
                        errs.push(format!("{at}.path: file {} does not exist", p.display()));
                    }
                }
            }
        }
        if self.embeddings.is_empty() {
            errs.push("embeddings: list is empty".into());
        }
        for (i, tj) in self.transfer.iter().enumerate() {
            let at = format!("transfer[{i}]");
            for (field, name) in [("source", &tj.source), ("target", &tj.target)] {
                if self.dataset(name).is_none() {
                    errs.push(format!("{at}.{field}: unknown dataset `{name}`"));
                }
            }
            if tj.architecture.parse::<Architecture>().is_err() {
                errs.push(format!("{at}.architecture: unknown architecture `{}`", tj.architecture));
            }
            if !self.embeddings.iter().any(|e| e.name == tj.embedding) {
                errs.push(format!("{at}.embedding: unknown embedding `{}`", tj.embedding));
            }
            if let Some(d) = tj.dimension {
                if !self.dimensions.contains(&d) {
                    errs.push(format!("{at}.dimension: {d} is not in `dimensions`"));
                }
            }
            if tj.approaches.is_empty() {
                errs.push(format!("{at}.approaches: list is empty"));
            }
            for a in &tj.approaches {
                if a.parse::<Approach>().is_err() {
                    errs.push(format!("{at}.approaches: unknown approach `{a}`"));
                }
            }
        }
        for layout in self.tables.datasets.keys() {
            if layout.parse::<Layout>().is_err() {
                errs.push(format!("tables.datasets: unknown layout `{layout}`"));
            }
        }
        errs
    }

    fn split_mode_checked(&self) -> Option<SplitMode> {
        self.mode.parse().ok()
    }

    pub fn classes_of(&self, d: &DatasetConfig) -> Vec<String> {
        if d.synthetic.is_some() {
            vec!["none".into(), "bully".into()]
        } else {
            d.classes.clone()
        }
    }

    pub fn oversample_classes(&self, d: &DatasetConfig) -> Vec<String> {
        d.oversample_classes.clone().unwrap_or_else(|| {
            self.classes_of(d)
                .into_iter()
                .filter(|c| *c != self.negative_class)
                .collect()
        })
    }
}

/// Parses, resolves paths, applies overrides and checks every field. All
/// problems are reported together.
pub fn validate_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(vec![format!("{}: {e}", path.display())]))?;
    let mut config = ExperimentConfig::from_toml(&text)?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
    let base = base.canonicalize().unwrap_or(base);
    config.resolve(&base);
    config.apply(overrides);
    for d in &mut config.datasets {
        if d.synthetic.is_some() && d.classes.is_empty() {
            d.classes = vec!["none".into(), "bully".into()];
        }
    }
    let errs = config.violations();
    if errs.is_empty() {
        Ok(config)
    } else {
        Err(Error::Validation(errs))
    }
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "d.csv", "id,text,label\n1,hi,none\n");
        let cfg = write(
            dir.path(),
            "c.toml",
            "output_dir = \"out\"\n[[datasets]]\nname = \"F\"\npath = \"d.csv\"\nclasses = [\"none\", \"bully\"]\n",
        );
        let c = validate_config(&cfg, &Overrides::default()).unwrap();
        assert_eq!(c.k, 5);
        assert_eq!(c.oversample_factor, 3);
        assert_eq!(c.dimensions, vec![50]);
        assert_eq!(c.split_mode(), SplitMode::Strict);
        assert!(c.output_dir.is_absolute());
        assert_eq!(c.oversample_classes(&c.datasets[0]), vec!["bully"]);
        let again = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn every_violation_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(
            dir.path(),
            "c.toml",
            "output_dir = \"out\"\narchitectures = [\"RNNX\"]\nk = 1\n\
             [[datasets]]\nname = \"F\"\npath = \"missing.csv\"\nclasses = [\"none\", \"bully\"]\n",
        );
        let Err(Error::Validation(errs)) = validate_config(&cfg, &Overrides::default()) else {
            panic!("expected validation failure");
        };
        assert!(errs.iter().any(|e| e.starts_with("architectures") && e.contains("RNNX")), "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("missing.csv")), "{errs:?}");
        assert!(errs.iter().any(|e| e.starts_with("k:")), "{errs:?}");
    }

    #[test]
    fn overrides_replace_fields() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(
            dir.path(),
            "c.toml",
            "output_dir = \"o\"\n[[datasets]]\nname = \"S\"\nsynthetic = { posts = 20, positive_rate = 0.5, seed = 1 }\n",
        );
        let o = Overrides { seed: Some(7), mode: Some(SplitMode::Fidelity), jobs: Some(2) };
        let c = validate_config(&cfg, &o).unwrap();
        assert_eq!((c.seed, c.split_mode(), c.jobs), (7, SplitMode::Fidelity, Some(2)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("output_dir = \"o\"\nfolds = 5\n").is_err());
    }
}
