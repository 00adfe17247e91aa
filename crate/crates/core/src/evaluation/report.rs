//! Per-fold metric rows and their CSV form.
//!
//! `results.csv` columns: `dataset, oversampled, architecture, embedding, class,
//! fold, precision, recall, f1, seed, mode`. Transfer runs go to `transfer.csv`
//! with `source, target, approach` in place of `dataset, oversampled`.
//! The fold column holds a fold index, `mean` (arithmetic mean of the fold
//! metrics) or `pooled` (metrics of the summed confusion matrices).

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::metrics::{precision_recall_f1, ConfusionMatrix};

pub const RESULTS_HEADER: &str =
    "dataset,oversampled,architecture,embedding,class,fold,precision,recall,f1,seed,mode";
pub const TRANSFER_HEADER: &str =
    "source,target,approach,architecture,embedding,class,fold,precision,recall,f1,seed,mode";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fold {
    Index(usize),
    Mean,
    Pooled,
}

impl fmt::Display for Fold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fold::Index(i) => write!(f, "{i}"),
            Fold::Mean => f.write_str("mean"),
            Fold::Pooled => f.write_str("pooled"),
        }
    }
}

impl FromStr for Fold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Fold::Mean),
            "pooled" => Ok(Fold::Pooled),
            _ => s
                .parse()
                .map(Fold::Index)
                .map_err(|_| Error::Config(format!("bad fold label `{s}`"))),
        }
    }
}

/// Identifies one cell of the experiment grid.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub dataset: String,
    pub oversampled: bool,
    pub architecture: String,
    pub embedding: String,
}

impl RunKey {
    /// `name` plus `+` when oversampled.
    pub fn dataset_label(&self) -> String {
        if self.oversampled {
            format!("{}+", self.dataset)
        } else {
            self.dataset.clone()
        }
    }

    /// Stable identifier usable as a directory name.
    pub fn id(&self) -> String {
        format!(
            "{}-{}-{}",
            self.dataset_label(),
            self.architecture,
            self.embedding.replace(['/', '@'], "_")
        )
    }
}

/// Marks rows produced by a transfer run. The row's dataset is the target.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransferTag {
    pub source: String,
    pub approach: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub key: RunKey,
    pub transfer: Option<TransferTag>,
    pub class: String,
    pub fold: Fold,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub seed: u64,
    pub mode: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<MetricRow>,
}

/// Shared context for [`EvalReport::from_folds`].
#[derive(Clone, Debug)]
pub struct RowContext<'a> {
    pub key: &'a RunKey,
    pub transfer: Option<&'a TransferTag>,
    pub classes: &'a [String],
    pub seed: u64,
    pub mode: &'a str,
}

impl EvalReport {
    /// Per-fold rows for every class, followed by `mean` and `pooled` rows.
    pub fn from_folds(ctx: &RowContext<'_>, folds: &[ConfusionMatrix]) -> Self {
        let mut rows = Vec::new();
        let row = |class: &str, fold, p: f64, r: f64, f: f64| MetricRow {
            key: ctx.key.clone(),
            transfer: ctx.transfer.cloned(),
            class: class.to_owned(),
            fold,
            precision: p,
            recall: r,
            f1: f,
            seed: ctx.seed,
            mode: ctx.mode.to_owned(),
        };
        for (c, class) in ctx.classes.iter().enumerate() {
            let per_fold: Vec<_> = folds.iter().map(|m| precision_recall_f1(m, c)).collect();
            for (i, m) in per_fold.iter().enumerate() {
                rows.push(row(class, Fold::Index(i), m.precision, m.recall, m.f1));
            }
            if !folds.is_empty() {
                let n = per_fold.len() as f64;
                let mean = |f: fn(&crate::evaluation::Prf) -> f64| per_fold.iter().map(f).sum::<f64>() / n;
                rows.push(row(
                    class,
                    Fold::Mean,
                    mean(|m| m.precision),
                    mean(|m| m.recall),
                    mean(|m| m.f1),
                ));
                let mut pooled = ConfusionMatrix::zeros(ctx.classes.len());
                folds.iter().for_each(|m| pooled.add(m));
                let m = precision_recall_f1(&pooled, c);
                rows.push(row(class, Fold::Pooled, m.precision, m.recall, m.f1));
            }
        }
        Self { rows }
    }

    pub fn extend(&mut self, other: EvalReport) {
        self.rows.extend(other.rows);
    }

    /// F1 values of the numbered folds for one run and class, in fold order.
    pub fn fold_f1(&self, key: &RunKey, class: &str) -> Vec<f64> {
        let mut v: Vec<(usize, f64)> = self
            .rows
            .iter()
            .filter(|r| &r.key == key && r.class == class && r.transfer.is_none())
            .filter_map(|r| match r.fold {
                Fold::Index(i) => Some((i, r.f1)),
                _ => None,
            })
            .collect();
        v.sort_by_key(|(i, _)| *i);
        v.into_iter().map(|(_, f)| f).collect()
    }

    /// The `mean` row for a run and class.
    pub fn mean(&self, key: &RunKey, class: &str) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| &r.key == key && r.class == class && r.fold == Fold::Mean)
    }

    pub fn write_results_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_results_rows(out, true)
    }

    /// Like [`EvalReport::write_results_csv`], optionally without the header line,
    /// for appending to an existing file.
    pub fn write_results_rows<W: Write>(&self, out: W, header: bool) -> Result<()> {
        if header {
            let mut out = out;
            out.write_all(RESULTS_HEADER.as_bytes())
                .and_then(|_| out.write_all(b"\n"))
                .map_err(|e| Error::io("results.csv", e))?;
            return self.write_results_rows(out, false);
        }
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for r in self.rows.iter().filter(|r| r.transfer.is_none()) {
            w.serialize(ResultRecord::from(r))?;
        }
        w.flush().map_err(|e| Error::io("results.csv", e))?;
        Ok(())
    }

    pub fn write_transfer_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_transfer_rows(out, true)
    }

    pub fn write_transfer_rows<W: Write>(&self, out: W, header: bool) -> Result<()> {
        if header {
            let mut out = out;
            out.write_all(TRANSFER_HEADER.as_bytes())
                .and_then(|_| out.write_all(b"\n"))
                .map_err(|e| Error::io("transfer.csv", e))?;
            return self.write_transfer_rows(out, false);
        }
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for r in self.rows.iter().filter(|r| r.transfer.is_some()) {
            w.serialize(TransferRecord::from(r))?;
        }
        w.flush().map_err(|e| Error::io("transfer.csv", e))?;
        Ok(())
    }

    /// Reads either CSV flavour; the header decides which.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers()?.clone();
        let mut rows = Vec::new();
        if headers.iter().any(|h| h == "approach") {
            for rec in reader.deserialize::<TransferRecord>() {
                rows.push(rec?.try_into()?);
            }
        } else {
            for rec in reader.deserialize::<ResultRecord>() {
                rows.push(rec?.try_into()?);
            }
        }
        Ok(Self { rows })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultRecord {
    dataset: String,
    oversampled: bool,
    architecture: String,
    embedding: String,
    class: String,
    fold: String,
    precision: f64,
    recall: f64,
    f1: f64,
    seed: u64,
    mode: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransferRecord {
    source: String,
    target: String,
    approach: String,
    architecture: String,
    embedding: String,
    class: String,
    fold: String,
    precision: f64,
    recall: f64,
    f1: f64,
    seed: u64,
    mode: String,
}

impl From<&MetricRow> for ResultRecord {
    fn from(r: &MetricRow) -> Self {
        Self {
            dataset: r.key.dataset.clone(),
            oversampled: r.key.oversampled,
            architecture: r.key.architecture.clone(),
            embedding: r.key.embedding.clone(),
            class: r.class.clone(),
            fold: r.fold.to_string(),
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            seed: r.seed,
            mode: r.mode.clone(),
        }
    }
}

impl TryFrom<ResultRecord> for MetricRow {
    type Error = Error;

    fn try_from(r: ResultRecord) -> Result<Self> {
        Ok(Self {
            key: RunKey {
                dataset: r.dataset,
                oversampled: r.oversampled,
                architecture: r.architecture,
                embedding: r.embedding,
            },
            transfer: None,
            class: r.class,
            fold: r.fold.parse()?,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            seed: r.seed,
            mode: r.mode,
        })
    }
}

impl From<&MetricRow> for TransferRecord {
    fn from(r: &MetricRow) -> Self {
        let t = r.transfer.clone().unwrap_or(TransferTag {
            source: String::new(),
            approach: String::new(),
        });
        Self {
            source: t.source,
            target: r.key.dataset_label(),
            approach: t.approach,
            architecture: r.key.architecture.clone(),
            embedding: r.key.embedding.clone(),
            class: r.class.clone(),
            fold: r.fold.to_string(),
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            seed: r.seed,
            mode: r.mode.clone(),
        }
    }
}

impl TryFrom<TransferRecord> for MetricRow {
    type Error = Error;

    fn try_from(r: TransferRecord) -> Result<Self> {
        Ok(Self {
            key: RunKey {
                oversampled: r.target.ends_with('+'),
                dataset: r.target.trim_end_matches('+').to_owned(),
                architecture: r.architecture,
                embedding: r.embedding,
            },
            transfer: Some(TransferTag {
                source: r.source,
                approach: r.approach,
            }),
            class: r.class,
            fold: r.fold.parse()?,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            seed: r.seed,
            mode: r.mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> RunKey {
        RunKey {
            dataset: "toy".into(),
            oversampled: true,
            architecture: "CNN".into(),
            embedding: "random".into(),
        }
    }

    #[test]
    fn rows_per_fold_plus_aggregates() {
        let classes = vec!["none".to_string(), "bully".to_string()];
        let m1 = ConfusionMatrix { classes: 2, counts: vec![vec![5, 1], vec![0, 2]] };
        let m2 = ConfusionMatrix { classes: 2, counts: vec![vec![6, 0], vec![1, 1]] };
        let k = key();
        let ctx = RowContext { key: &k, transfer: None, classes: &classes, seed: 3, mode: "strict" };
        let report = EvalReport::from_folds(&ctx, &[m1, m2]);
        assert_eq!(report.rows.len(), 2 * (2 + 2));
        assert_eq!(report.fold_f1(&k, "bully").len(), 2);
        let mean = report.mean(&k, "bully").unwrap();
        let f = report.fold_f1(&k, "bully");
        assert!((mean.f1 - (f[0] + f[1]) / 2.0).abs() < 1e-15);
        let pooled = report.rows.iter().find(|r| r.class == "bully" && r.fold == Fold::Pooled).unwrap();
        // pooled: TP 3, FP 1, FN 1
        assert_eq!(pooled.precision, 0.75);
        assert_eq!(pooled.recall, 0.75);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let classes = vec!["none".to_string(), "bully".to_string()];
        let m = ConfusionMatrix { classes: 2, counts: vec![vec![7, 2], vec![3, 11]] };
        let k = key();
        let ctx = RowContext { key: &k, transfer: None, classes: &classes, seed: 1, mode: "strict" };
        let report = EvalReport::from_folds(&ctx, &[m.clone(), m]);
        let mut buf = Vec::new();
        report.write_results_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "dataset,oversampled,architecture,embedding,class,fold,precision,recall,f1,seed,mode\n"
        ));
        assert_eq!(EvalReport::read_csv(&buf[..]).unwrap(), report);

        let tag = TransferTag { source: "wiki+".into(), approach: "model".into() };
        let ctx = RowContext { transfer: Some(&tag), ..ctx };
        let m = ConfusionMatrix { classes: 2, counts: vec![vec![1, 2], vec![3, 4]] };
        let t = EvalReport::from_folds(&ctx, &[m]);
        let mut buf = Vec::new();
        t.write_transfer_csv(&mut buf).unwrap();
        assert_eq!(EvalReport::read_csv(&buf[..]).unwrap(), t);
    }
}
