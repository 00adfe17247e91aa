//! Executes a validated [`ExperimentConfig`].
//!
//! Output directory layout:
//!
//! * `results.csv`: one row per (cell, class, fold), appended cell by cell in
//!   grid order and synced after each cell
//! * `transfer.csv`: rows of transfer jobs
//! * `significance.csv`: Mann-Whitney tests of oversampled vs original fold F1
//! * `tables/<layout>.md` and `tables/<layout>.csv`
//! * `folds/<dataset>.json`: fold plans
//! * `models/<run id>/`: saved transfer sources
//! * `config.toml` (normalised) and `manifest.json`

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::datasets::{load_corpus, CvProtocol, LabeledCorpus, Oversampling};
use crate::embeddings::{read_word_vectors, WordVectors};
use crate::error::{Error, Result};
use crate::evaluation::mann_whitney::mann_whitney_u;
use crate::evaluation::report::{EvalReport, Fold, MetricRow, RowContext, RunKey, TransferTag};
use crate::evaluation::tables::{render_tables, Layout, RenderOptions};
use crate::experiment::config::ExperimentConfig;
use crate::models::bundle::{Hyperparams, ModelBundle};
use crate::models::io::save_model;
use crate::models::network::{Architecture, LayerGeometry};
use crate::nn::adam::AdamConfig;
use crate::pipeline::{cross_validate, derive_seed, fit, EmbeddingInit, FitSpec};
use crate::synthetic::planted_corpus;
use crate::text::Preprocessor;
use crate::transfer::{merge_report, transfer_complete, transfer_trained, Approach, VocabMerge};

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub cells: usize,
    pub failures: Vec<String>,
    pub report: EvalReport,
}

impl RunSummary {
    pub fn results_csv(&self) -> PathBuf {
        self.output_dir.join("results.csv")
    }
}

/// Runs `work` over `tasks` on `jobs` threads and hands each result to `sink`
/// in task order, whatever order they finish in.
pub fn run_ordered<T, R, W, S>(tasks: &[T], jobs: usize, work: W, mut sink: S)
where
    T: Sync,
    R: Send,
    W: Fn(&T) -> R + Sync,
    S: FnMut(usize, R),
{
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, R)>();
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(tasks.len().max(1)) {
            let tx = tx.clone();
            let (next, work) = (&next, &work);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= tasks.len() {
                    break;
                }
                if tx.send((i, work(&tasks[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut expected = 0;
        for (i, r) in rx {
            pending.insert(i, r);
            while let Some(r) = pending.remove(&expected) {
                sink(expected, r);
                expected += 1;
            }
        }
    });
}

/// Append-only CSV file, synced after every chunk.
struct Appender {
    file: File,
    path: PathBuf,
}

impl Appender {
    fn create(path: PathBuf, header: &str) -> Result<Self> {
        let mut file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        writeln!(file, "{header}").map_err(|e| Error::io(&path, e))?;
        file.sync_data().map_err(|e| Error::io(&path, e))?;
        drop(file);
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self { file, path })
    }

    fn append(&mut self, bytes: &[u8]) -> Result<()> {
        self.file.write_all(bytes).map_err(|e| Error::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| Error::io(&self.path, e))
    }
}

#[derive(Clone, Debug)]
struct Cell {
    key: RunKey,
    dataset: usize,
    architecture: Architecture,
    embedding: usize,
    dim: usize,
    seed: u64,
}

#[derive(Clone, Debug, Serialize)]
struct CellRecord {
    id: String,
    dataset: String,
    oversampled: bool,
    architecture: String,
    embedding: String,
    dimension: usize,
    seed: u64,
    status: String,
    seconds: f64,
    final_epoch_loss: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
struct DatasetRecord {
    name: String,
    source: String,
    checksum: String,
    posts: usize,
    classes: Vec<String>,
    class_counts: Vec<usize>,
    fold_seed: u64,
}

#[derive(Clone, Debug, Serialize)]
struct EmbeddingRecord {
    name: String,
    dimension: usize,
    path: Option<PathBuf>,
    checksum: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
struct TransferRecord {
    source: String,
    target: String,
    approach: String,
    seed: u64,
    status: String,
    vocab_merge: Option<VocabMerge>,
    dense_copied: Option<bool>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    crate_version: &'static str,
    config_checksum: String,
    config: &'a ExperimentConfig,
    seed: u64,
    mode: String,
    seed_policy: &'static str,
    significance_samples: &'static str,
    started_unix: u64,
    wall_seconds: f64,
    stopwords_checksum: String,
    datasets: Vec<DatasetRecord>,
    embeddings: Vec<EmbeddingRecord>,
    cells: Vec<CellRecord>,
    transfer: Vec<TransferRecord>,
    failures: Vec<String>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents).map_err(|e| Error::io(path, e))?;
    f.sync_data().map_err(|e| Error::io(path, e))
}

fn hyperparams(config: &ExperimentConfig, dim: usize) -> Hyperparams {
    let t = &config.training;
    Hyperparams {
        embedding_dim: dim,
        geometry: LayerGeometry {
            hidden: t.hidden,
            filters: t.filters,
            kernel_width: t.kernel_width,
            dropout_embedding: t.dropout_embedding,
            dropout_hidden: t.dropout_hidden,
        },
        epochs: t.epochs,
        batch_size: t.batch_size,
        adam: AdamConfig {
            learning_rate: t.learning_rate,
            ..AdamConfig::default()
        },
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    corpora: Vec<LabeledCorpus>,
    vectors: HashMap<(usize, usize), (Arc<WordVectors>, String)>,
    preprocessor: Arc<Preprocessor>,
}

impl Context<'_> {
    fn protocol(&self, dataset: usize, oversampled: bool) -> CvProtocol {
        let d = &self.config.datasets[dataset];
        CvProtocol {
            k: self.config.k,
            seed: derive_seed(self.config.seed, &format!("folds/{}", d.name)),
            stratified: self.config.stratified,
            mode: self.config.split_mode(),
            oversampling: oversampled.then(|| Oversampling {
                classes: self.config.oversample_classes(d),
                factor: self.config.oversample_factor,
            }),
        }
    }

    fn spec(&self, architecture: Architecture, embedding: usize, dim: usize) -> FitSpec {
        let e = &self.config.embeddings[embedding];
        let init = match self.vectors.get(&(embedding, dim)) {
            None => EmbeddingInit::Random,
            Some((vectors, checksum)) => EmbeddingInit::Pretrained {
                name: e.name.clone(),
                vectors: Arc::clone(vectors),
                file_checksum: checksum.clone(),
            },
        };
        FitSpec {
            architecture,
            hyper: hyperparams(self.config, dim),
            embedding: init,
            vocab_cap: self.config.training.vocab_cap,
            preprocessor: Arc::clone(&self.preprocessor),
        }
    }

    fn embedding_index(&self, name: &str) -> usize {
        self.config
            .embeddings
            .iter()
            .position(|e| e.name == name)
            .expect("validated embedding name")
    }

    fn dataset_index(&self, name: &str) -> usize {
        self.config
            .datasets
            .iter()
            .position(|d| d.name == name)
            .expect("validated dataset name")
    }
}

fn label(name: &str, oversampled: bool) -> String {
    if oversampled {
        format!("{name}+")
    } else {
        name.to_owned()
    }
}

/// Runs the whole grid, then the transfer jobs, and writes every output file.
/// Cell failures are logged, recorded in the manifest and skipped.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let errs = config.violations();
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }
    let out = config.output_dir.clone();
    for sub in ["", "tables", "folds", "models"] {
        let p = out.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let jobs = config
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let config_checksum = config.checksum();
    write_file(&out.join("config.toml"), config.to_toml().as_bytes())?;

    let (preprocessor, stopwords_checksum) = match &config.stopwords {
        Some(p) => (Preprocessor::from_file(p)?, sha256_file(p)?),
        None => (
            Preprocessor::default(),
            hex::encode(Sha256::digest(crate::text::shipped_stopwords().as_bytes())),
        ),
    };

    let mut corpora = Vec::new();
    let mut dataset_records = Vec::new();
    for d in &config.datasets {
        let (corpus, source, checksum) = match (&d.path, d.synthetic_spec()) {
            (Some(p), _) => (load_corpus(p, &d.schema())?, p.display().to_string(), sha256_file(p)?),
            (None, Some((spec, seed))) => {
                let c = planted_corpus(&spec, seed)?;
                let mut bytes = Vec::new();
                for p in &c.posts {
                    bytes.extend_from_slice(format!("{}\t{}\t{}\n", p.id, p.label, p.text).as_bytes());
                }
                (c, format!("synthetic(seed={seed})"), hex::encode(Sha256::digest(&bytes)))
            }
            (None, None) => unreachable!("validated"),
        };
        log::info!("dataset {}: {} posts, classes {:?}", d.name, corpus.len(), corpus.class_counts());
        dataset_records.push(DatasetRecord {
            name: d.name.clone(),
            source,
            checksum,
            posts: corpus.len(),
            classes: corpus.classes.clone(),
            class_counts: corpus.class_counts(),
            fold_seed: derive_seed(config.seed, &format!("folds/{}", d.name)),
        });
        corpora.push(corpus);
    }

    let mut vectors = HashMap::new();
    let mut embedding_records = Vec::new();
    for (ei, e) in config.embeddings.iter().enumerate() {
        for &dim in &config.dimensions {
            let path = e.path_for(dim);
            let checksum = match &path {
                Some(p) => {
                    let (v, sum) = read_word_vectors(p, Some(dim))?;
                    log::info!("embedding {}@{dim}: {} vectors", e.name, v.vectors.len());
                    vectors.insert((ei, dim), (Arc::new(v), sum.clone()));
                    Some(sum)
                }
                None => None,
            };
            embedding_records.push(EmbeddingRecord {
                name: e.name.clone(),
                dimension: dim,
                path,
                checksum,
            });
        }
    }

    let ctx = Context {
        config,
        corpora,
        vectors,
        preprocessor: Arc::new(preprocessor),
    };

    for (di, d) in config.datasets.iter().enumerate() {
        for &over in &config.oversampled {
            let plan = ctx.protocol(di, over).plan(&ctx.corpora[di])?;
            write_file(
                &out.join("folds").join(format!("{}.json", label(&d.name, over))),
                plan.to_json()?.as_bytes(),
            )?;
        }
    }

    let mut cells = Vec::new();
    for (di, d) in config.datasets.iter().enumerate() {
        for &over in &config.oversampled {
            for architecture in config.architecture_list() {
                for (ei, e) in config.embeddings.iter().enumerate() {
                    for &dim in &config.dimensions {
                        let key = RunKey {
                            dataset: d.name.clone(),
                            oversampled: over,
                            architecture: architecture.as_str().to_owned(),
                            embedding: config.embedding_label(&e.name, dim),
                        };
                        let seed = derive_seed(config.seed, &format!("cell/{}/{dim}", key.id()));
                        cells.push(Cell {
                            key,
                            dataset: di,
                            architecture,
                            embedding: ei,
                            dim,
                            seed,
                        });
                    }
                }
            }
        }
    }

    let mode = config.split_mode().to_string();
    let mut results = Appender::create(out.join("results.csv"), crate::evaluation::RESULTS_HEADER)?;
    let mut report = EvalReport::default();
    let mut failures = Vec::new();
    let mut cell_records = Vec::new();
    let total = cells.len();
    let mut write_error = None;
    run_ordered(
        &cells,
        jobs,
        |cell| {
            let t = Instant::now();
            let spec = ctx.spec(cell.architecture, cell.embedding, cell.dim);
            let protocol = ctx.protocol(cell.dataset, cell.key.oversampled);
            let outcome = cross_validate(&ctx.corpora[cell.dataset], &protocol, &spec, cell.seed, None);
            (outcome, t.elapsed().as_secs_f64())
        },
        |i, (outcome, seconds)| {
            let cell = &cells[i];
            let id = format!("{}@{}", cell.key.id(), cell.dim);
            let mut rec = CellRecord {
                id: id.clone(),
                dataset: cell.key.dataset.clone(),
                oversampled: cell.key.oversampled,
                architecture: cell.key.architecture.clone(),
                embedding: cell.key.embedding.clone(),
                dimension: cell.dim,
                seed: cell.seed,
                status: "ok".into(),
                seconds,
                final_epoch_loss: Vec::new(),
            };
            match outcome {
                Ok(o) => {
                    let classes = &ctx.corpora[cell.dataset].classes;
                    let ctx_rows = RowContext {
                        key: &cell.key,
                        transfer: None,
                        classes,
                        seed: cell.seed,
                        mode: &mode,
                    };
                    let r = EvalReport::from_folds(&ctx_rows, &o.folds);
                    let mut buf = Vec::new();
                    let written = r
                        .write_results_rows(&mut buf, false)
                        .and_then(|_| results.append(&buf));
                    if let Err(e) = written {
                        write_error.get_or_insert(e);
                    }
                    rec.final_epoch_loss = o
                        .histories
                        .iter()
                        .filter_map(|h| h.epoch_loss.last().copied())
                        .collect();
                    log::info!("[{}/{total}] {id}: done in {seconds:.1}s", i + 1);
                    report.extend(r);
                }
                Err(e) => {
                    log::error!("[{}/{total}] {id}: {e}", i + 1);
                    rec.status = format!("failed: {e}");
                    failures.push(format!("{id}: {e}"));
                }
            }
            cell_records.push(rec);
        },
    );
    if let Some(e) = write_error {
        return Err(e);
    }

    if config.dimensions.len() > 1 {
        let averaged = dimension_averages(config, &report, &mode);
        let mut buf = Vec::new();
        averaged.write_results_rows(&mut buf, false)?;
        results.append(&buf)?;
        report.extend(averaged);
    }

    let (transfer_report, transfer_records) = run_transfers(&ctx, jobs, &out, &mode, &mut failures)?;
    let mut tbuf = Vec::new();
    transfer_report.write_transfer_csv(&mut tbuf)?;
    write_file(&out.join("transfer.csv"), &tbuf)?;
    report.extend(transfer_report);

    write_significance(config, &report, &out.join("significance.csv"))?;
    write_tables(config, &report, &out, &config_checksum)?;

    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION"),
        config_checksum,
        config,
        seed: config.seed,
        mode,
        seed_policy: "cell seed = first 8 bytes (LE) of SHA-256(master seed LE || \"cell/<run id>/<dim>\"); \
                      fold seed = SHA-256(cell seed || \"fold<i>\"); fold plan seed = SHA-256(master || \"folds/<dataset>\")",
        significance_samples: "per-fold F1 of oversampled vs original runs, two-sided Mann-Whitney U; \
                               the original work does not say which samples it tested",
        started_unix,
        wall_seconds: started.elapsed().as_secs_f64(),
        stopwords_checksum,
        datasets: dataset_records,
        embeddings: embedding_records,
        cells: cell_records,
        transfer: transfer_records,
        failures: failures.clone(),
    };
    write_file(&out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(RunSummary {
        output_dir: out,
        cells: total,
        failures,
        report,
    })
}

/// Mean over dimensions of each embedding's `mean` rows, labelled with the bare
/// embedding name.
fn dimension_averages(config: &ExperimentConfig, report: &EvalReport, mode: &str) -> EvalReport {
    let mut groups: BTreeMap<(RunKey, String), Vec<&MetricRow>> = BTreeMap::new();
    for r in report.rows.iter().filter(|r| r.fold == Fold::Mean) {
        let Some((name, _)) = r.key.embedding.split_once("@d") else { continue };
        let mut key = r.key.clone();
        key.embedding = name.to_owned();
        groups.entry((key, r.class.clone())).or_default().push(r);
    }
    let mut out = EvalReport::default();
    for ((key, class), rows) in groups {
        let n = rows.len() as f64;
        let avg = |f: fn(&MetricRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
        out.rows.push(MetricRow {
            key,
            transfer: None,
            class,
            fold: Fold::Mean,
            precision: avg(|r| r.precision),
            recall: avg(|r| r.recall),
            f1: avg(|r| r.f1),
            seed: config.seed,
            mode: mode.to_owned(),
        });
    }
    out
}

#[derive(Clone, Debug)]
struct SourceJob {
    dataset: usize,
    oversampled: bool,
    architecture: Architecture,
    embedding: usize,
    dim: usize,
}

impl SourceJob {
    fn id(&self, ctx: &Context<'_>) -> String {
        let c = ctx.config;
        format!(
            "{}-{}-{}-d{}",
            label(&c.datasets[self.dataset].name, self.oversampled),
            self.architecture,
            c.embeddings[self.embedding].name,
            self.dim
        )
    }
}

struct TransferTask {
    source: usize,
    target: usize,
    target_oversampled: bool,
    approach: Approach,
}

fn run_transfers(
    ctx: &Context<'_>,
    jobs: usize,
    out: &Path,
    mode: &str,
    failures: &mut Vec<String>,
) -> Result<(EvalReport, Vec<TransferRecord>)> {
    let config = ctx.config;
    let mut sources: Vec<SourceJob> = Vec::new();
    let mut tasks = Vec::new();
    for tj in &config.transfer {
        let src = SourceJob {
            dataset: ctx.dataset_index(&tj.source),
            oversampled: tj.source_oversampled,
            architecture: tj.architecture.parse()?,
            embedding: ctx.embedding_index(&tj.embedding),
            dim: tj.dimension.unwrap_or(config.dimensions[0]),
        };
        let id = src.id(ctx);
        let si = match sources.iter().position(|s| s.id(ctx) == id) {
            Some(i) => i,
            None => {
                sources.push(src);
                sources.len() - 1
            }
        };
        for a in &tj.approaches {
            tasks.push(TransferTask {
                source: si,
                target: ctx.dataset_index(&tj.target),
                target_oversampled: tj.target_oversampled,
                approach: a.parse()?,
            });
        }
    }
    if tasks.is_empty() {
        return Ok((EvalReport::default(), Vec::new()));
    }

    let mut bundles: Vec<Option<ModelBundle>> = Vec::new();
    let mut write_error = None;
    run_ordered(
        &sources,
        jobs,
        |s| {
            let corpus = &ctx.corpora[s.dataset];
            let protocol = ctx.protocol(s.dataset, s.oversampled);
            let training = match &protocol.oversampling {
                Some(o) => {
                    let idx: Result<Vec<usize>> = o.classes.iter().map(|c| corpus.class_index(c)).collect();
                    idx.and_then(|idx| crate::datasets::oversample_classes(corpus, &idx, o.factor))
                }
                None => Ok(corpus.clone()),
            };
            let seed = derive_seed(config.seed, &format!("source/{}", s.id(ctx)));
            training.and_then(|t| {
                let mut spec = ctx.spec(s.architecture, s.embedding, s.dim);
                spec.preprocessor = Arc::clone(&ctx.preprocessor);
                fit(&t, &spec, seed).map(|(mut b, _)| {
                    b.provenance.dataset = label(&config.datasets[s.dataset].name, s.oversampled);
                    b.provenance.seed = seed;
                    b.provenance.mode = config.split_mode();
                    b
                })
            })
        },
        |i, result| {
            let id = sources[i].id(ctx);
            match result {
                Ok(b) => {
                    if let Err(e) = save_model(&b, &out.join("models").join(&id)) {
                        write_error.get_or_insert(e);
                    }
                    log::info!("transfer source {id} trained and saved");
                    bundles.push(Some(b));
                }
                Err(e) => {
                    log::error!("transfer source {id}: {e}");
                    failures.push(format!("source {id}: {e}"));
                    bundles.push(None);
                }
            }
        },
    );
    if let Some(e) = write_error {
        return Err(e);
    }

    let mut report = EvalReport::default();
    let mut records = Vec::new();
    run_ordered(
        &tasks,
        jobs,
        |t| -> Result<(EvalReport, Option<VocabMerge>, Option<bool>, u64)> {
            let s = &sources[t.source];
            let Some(source) = &bundles[t.source] else {
                return Err(Error::Config("source model failed to train".into()));
            };
            let target = &ctx.corpora[t.target];
            let protocol = ctx.protocol(t.target, t.target_oversampled);
            let key = RunKey {
                dataset: config.datasets[t.target].name.clone(),
                oversampled: t.target_oversampled,
                architecture: s.architecture.as_str().to_owned(),
                embedding: config.embedding_label(&config.embeddings[s.embedding].name, s.dim),
            };
            let tag = TransferTag {
                source: label(&config.datasets[s.dataset].name, s.oversampled),
                approach: t.approach.as_str().to_owned(),
            };
            let seed = derive_seed(
                config.seed,
                &format!("transfer/{}/{}/{}", s.id(ctx), key.dataset_label(), t.approach),
            );
            let spec = FitSpec {
                embedding: EmbeddingInit::Random,
                ..ctx.spec(s.architecture, s.embedding, s.dim)
            };
            let (folds, merge, dense) = match t.approach {
                Approach::Complete => (
                    transfer_complete(source, target, &protocol, &ctx.preprocessor, &config.negative_class)?,
                    None,
                    None,
                ),
                approach => {
                    let merge = merge_report(source, target, &protocol, &spec)?;
                    let dense = (approach == Approach::Model).then(|| {
                        crate::transfer::class_map(&source.classes, &target.classes, &config.negative_class)
                            .map(|m| {
                                let mut seen = vec![false; target.classes.len()];
                                m.len() == seen.len() && m.iter().all(|&c| !std::mem::replace(&mut seen[c], true))
                            })
                            .unwrap_or(false)
                    });
                    let o = transfer_trained(approach, source, target, &protocol, &spec, seed, &config.negative_class)?;
                    (o.folds, Some(merge), dense)
                }
            };
            let rows = RowContext {
                key: &key,
                transfer: Some(&tag),
                classes: &target.classes,
                seed,
                mode,
            };
            Ok((EvalReport::from_folds(&rows, &folds), merge, dense, seed))
        },
        |i, result| {
            let t = &tasks[i];
            let s = &sources[t.source];
            let mut rec = TransferRecord {
                source: s.id(ctx),
                target: label(&config.datasets[t.target].name, t.target_oversampled),
                approach: t.approach.as_str().to_owned(),
                seed: 0,
                status: "ok".into(),
                vocab_merge: None,
                dense_copied: None,
            };
            match result {
                Ok((r, merge, dense, seed)) => {
                    rec.seed = seed;
                    rec.vocab_merge = merge;
                    rec.dense_copied = dense;
                    log::info!("transfer {} -> {} ({}) done", rec.source, rec.target, rec.approach);
                    report.extend(r);
                }
                Err(e) => {
                    log::error!("transfer {} -> {} ({}): {e}", rec.source, rec.target, rec.approach);
                    failures.push(format!("transfer {} -> {} ({}): {e}", rec.source, rec.target, rec.approach));
                    rec.status = format!("failed: {e}");
                }
            }
            records.push(rec);
        },
    );
    Ok((report, records))
}

#[derive(Debug, Serialize)]
struct SignificanceRow {
    dataset: String,
    architecture: String,
    embedding: String,
    class: String,
    n_original: usize,
    n_oversampled: usize,
    mean_f1_original: f64,
    mean_f1_oversampled: f64,
    u: f64,
    p_value: f64,
    exact: bool,
}

/// Oversampled vs original fold-level F1 per (dataset, architecture, embedding,
/// class), plus one row per (dataset, architecture, class) pooling all
/// embeddings under `*`.
fn write_significance(config: &ExperimentConfig, report: &EvalReport, path: &Path) -> Result<()> {
    let mut samples: BTreeMap<(String, String, String, String, bool), Vec<f64>> = BTreeMap::new();
    for r in report.rows.iter().filter(|r| r.transfer.is_none()) {
        if let Fold::Index(_) = r.fold {
            if r.class == config.negative_class {
                continue;
            }
            let k = &r.key;
            for emb in [k.embedding.clone(), "*".to_owned()] {
                samples
                    .entry((k.dataset.clone(), k.architecture.clone(), emb, r.class.clone(), k.oversampled))
                    .or_default()
                    .push(r.f1);
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut wrote = false;
    for ((d, a, e, c, over), original) in &samples {
        if *over {
            continue;
        }
        let Some(boosted) = samples.get(&(d.clone(), a.clone(), e.clone(), c.clone(), true)) else {
            continue;
        };
        let mw = mann_whitney_u(boosted, original)?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        w.serialize(SignificanceRow {
            dataset: d.clone(),
            architecture: a.clone(),
            embedding: e.clone(),
            class: c.clone(),
            n_original: original.len(),
            n_oversampled: boosted.len(),
            mean_f1_original: mean(original),
            mean_f1_oversampled: mean(boosted),
            u: mw.u,
            p_value: mw.p_value,
            exact: mw.exact,
        })?;
        wrote = true;
    }
    let mut bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    if !wrote {
        bytes = b"dataset,architecture,embedding,class,n_original,n_oversampled,mean_f1_original,mean_f1_oversampled,u,p_value,exact\n".to_vec();
    }
    write_file(path, &bytes)
}

fn write_tables(config: &ExperimentConfig, report: &EvalReport, out: &Path, checksum: &str) -> Result<()> {
    let names: Vec<String> = config.embeddings.iter().map(|e| e.name.clone()).collect();
    let focus = config
        .tables
        .focus_embedding
        .clone()
        .or_else(|| names.iter().find(|n| *n == "sswe").cloned())
        .unwrap_or_else(|| names[0].clone());
    let reports = std::slice::from_ref(report);
    for layout in Layout::ALL {
        let opts = RenderOptions {
            negative_class: config.negative_class.clone(),
            embeddings: names.clone(),
            focus_embedding: focus.clone(),
            datasets: config.tables.datasets.get(layout.as_str()).cloned(),
        };
        let table = render_tables(reports, layout, &opts);
        let md = format!(
            "{}\nmode: {} · seed: {} · config checksum: {checksum}\n",
            table.to_markdown(),
            config.split_mode(),
            config.seed
        );
        write_file(&out.join("tables").join(format!("{layout}.md")), md.as_bytes())?;
        write_file(&out.join("tables").join(format!("{layout}.csv")), table.to_csv()?.as_bytes())?;
    }
    Ok(())
}
