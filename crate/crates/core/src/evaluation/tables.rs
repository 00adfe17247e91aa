//! Paper-shaped result tables.
//!
//! Cells are taken from `mean` rows. Markdown rounds to two decimals and
//! prints `—` for missing cells; CSV keeps full precision and leaves them empty.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluation::report::{EvalReport, Fold, MetricRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layout {
    /// BLSTM_ATTN, original and oversampled rows, metric × embedding columns.
    Table1a,
    /// F1 only, embedding × {CNN, BLSTM_ATTN} columns.
    Table2a,
    /// One embedding, oversampled rows, metric × architecture columns.
    Table3a,
    /// Same shape as `Table1a`.
    Table4,
    /// Same shape as `Table3a`.
    Table5,
    /// Transfer runs: source × approach rows, metric columns per target.
    Table6,
}

impl Layout {
    pub const ALL: [Layout; 6] = [
        Layout::Table1a,
        Layout::Table2a,
        Layout::Table3a,
        Layout::Table4,
        Layout::Table5,
        Layout::Table6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Layout::Table1a => "table1a",
            Layout::Table2a => "table2a",
            Layout::Table3a => "table3a",
            Layout::Table4 => "table4",
            Layout::Table5 => "table5",
            Layout::Table6 => "table6",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Layout::Table1a | Layout::Table4 => {
                "BLSTM with attention, by initial word embedding, original and oversampled"
            }
            Layout::Table2a => "F1 of CNN and BLSTM with attention by initial word embedding",
            Layout::Table3a | Layout::Table5 => "All architectures, oversampled",
            Layout::Table6 => "Transfer learning approaches using BLSTM with attention",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Layout::ALL
            .into_iter()
            .find(|l| l.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown layout `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct RenderOptions {
    /// Class omitted from the rows.
    pub negative_class: String,
    /// Embedding columns, in order.
    pub embeddings: Vec<String>,
    /// Embedding used by the architecture comparison layouts.
    pub focus_embedding: String,
    /// Restricts and orders the datasets; `None` keeps first-appearance order.
    pub datasets: Option<Vec<String>>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            negative_class: "none".into(),
            embeddings: vec!["random".into(), "glove".into(), "sswe".into()],
            focus_embedding: "sswe".into(),
            datasets: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedTable {
    pub layout: Layout,
    pub title: String,
    /// Leading label columns, then value columns.
    pub label_headers: Vec<String>,
    pub value_headers: Vec<String>,
    pub rows: Vec<(Vec<String>, Vec<Option<f64>>)>,
}

impl RenderedTable {
    pub fn to_markdown(&self) -> String {
        let mut s = format!("### {}\n\n", self.title);
        let headers: Vec<&str> = self
            .label_headers
            .iter()
            .chain(&self.value_headers)
            .map(String::as_str)
            .collect();
        let _ = writeln!(s, "| {} |", headers.join(" | "));
        let _ = writeln!(
            s,
            "|{}",
            headers
                .iter()
                .enumerate()
                .map(|(i, _)| if i < self.label_headers.len() { "---|" } else { "---:|" })
                .collect::<String>()
        );
        for (labels, values) in &self.rows {
            let cells: Vec<String> = labels
                .iter()
                .cloned()
                .chain(values.iter().map(|v| match v {
                    Some(x) => format!("{x:.2}"),
                    None => "—".to_owned(),
                }))
                .collect();
            let _ = writeln!(s, "| {} |", cells.join(" | "));
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.label_headers.iter().chain(&self.value_headers))?;
        for (labels, values) in &self.rows {
            let rec: Vec<String> = labels
                .iter()
                .cloned()
                .chain(values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()))
                .collect();
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("table csv", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Clone, Copy)]
enum Metric {
    Precision,
    Recall,
    F1,
}

impl Metric {
    const ALL: [Metric; 3] = [Metric::Precision, Metric::Recall, Metric::F1];

    fn name(self) -> &'static str {
        match self {
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::F1 => "F1",
        }
    }

    fn of(self, r: &MetricRow) -> f64 {
        match self {
            Metric::Precision => r.precision,
            Metric::Recall => r.recall,
            Metric::F1 => r.f1,
        }
    }
}

fn arch_label(a: &str) -> &str {
    match a {
        "BLSTM_ATTN" => "BLSTM attention",
        other => other,
    }
}

const ATTN: &str = "BLSTM_ATTN";
const ALL_ARCHS: [&str; 4] = ["CNN", "LSTM", "BLSTM", ATTN];
const APPROACHES: [&str; 3] = ["complete", "feature", "model"];

fn approach_label(a: &str) -> &str {
    match a {
        "complete" => "Complete",
        "feature" => "Feature Level",
        "model" => "Model Level",
        other => other,
    }
}

struct Index<'a> {
    rows: Vec<&'a MetricRow>,
}

impl<'a> Index<'a> {
    fn find(&self, dataset: &str, oversampled: bool, arch: &str, emb: &str, class: &str) -> Option<&'a MetricRow> {
        self.rows.iter().copied().find(|r| {
            r.transfer.is_none()
                && r.key.dataset == dataset
                && r.key.oversampled == oversampled
                && r.key.architecture == arch
                && r.key.embedding == emb
                && r.class == class
        })
    }
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_owned());
        }
    }
    out
}

/// Renders one layout from the `mean` rows of the given reports.
pub fn render_tables(reports: &[EvalReport], layout: Layout, opts: &RenderOptions) -> RenderedTable {
    let rows: Vec<&MetricRow> = reports
        .iter()
        .flat_map(|r| &r.rows)
        .filter(|r| r.fold == Fold::Mean)
        .collect();
    let ordinary: Vec<&MetricRow> = rows.iter().copied().filter(|r| r.transfer.is_none()).collect();
    let datasets = match &opts.datasets {
        Some(d) => d.clone(),
        None => first_appearance(ordinary.iter().map(|r| r.key.dataset.as_str())),
    };
    let classes_of = |dataset: &str| {
        first_appearance(
            ordinary
                .iter()
                .filter(|r| r.key.dataset == dataset && r.class != opts.negative_class)
                .map(|r| r.class.as_str()),
        )
    };
    let index = Index { rows: rows.clone() };
    let mut table = RenderedTable {
        layout,
        title: layout.title().to_owned(),
        label_headers: vec!["Dataset".into(), "Label".into()],
        value_headers: Vec::new(),
        rows: Vec::new(),
    };
    let label = |d: &str, over: bool| if over { format!("{d}+") } else { d.to_owned() };

    match layout {
        Layout::Table1a | Layout::Table4 => {
            for m in Metric::ALL {
                for e in &opts.embeddings {
                    table.value_headers.push(format!("{} {}", m.name(), e));
                }
            }
            for d in &datasets {
                for c in classes_of(d) {
                    for over in [false, true] {
                        let values = Metric::ALL
                            .iter()
                            .flat_map(|m| {
                                opts.embeddings
                                    .iter()
                                    .map(|e| index.find(d, over, ATTN, e, &c).map(|r| m.of(r)))
                                    .collect::<Vec<_>>()
                            })
                            .collect::<Vec<_>>();
                        if values.iter().any(Option::is_some) {
                            table.rows.push((vec![label(d, over), c.clone()], values));
                        }
                    }
                }
            }
        }
        Layout::Table2a => {
            for e in &opts.embeddings {
                for a in ["CNN", ATTN] {
                    table.value_headers.push(format!("{} {}", e, arch_label(a)));
                }
            }
            for d in &datasets {
                for c in classes_of(d) {
                    for over in [false, true] {
                        let values = opts
                            .embeddings
                            .iter()
                            .flat_map(|e| {
                                ["CNN", ATTN]
                                    .map(|a| index.find(d, over, a, e, &c).map(|r| r.f1))
                            })
                            .collect::<Vec<_>>();
                        if values.iter().any(Option::is_some) {
                            table.rows.push((vec![label(d, over), c.clone()], values));
                        }
                    }
                }
            }
        }
        Layout::Table3a | Layout::Table5 => {
            table.title = format!("{} ({})", table.title, opts.focus_embedding);
            for m in Metric::ALL {
                for a in ALL_ARCHS {
                    table.value_headers.push(format!("{} {}", m.name(), arch_label(a)));
                }
            }
            for d in &datasets {
                for c in classes_of(d) {
                    let values = Metric::ALL
                        .iter()
                        .flat_map(|m| {
                            ALL_ARCHS
                                .map(|a| index.find(d, true, a, &opts.focus_embedding, &c).map(|r| m.of(r)))
                        })
                        .collect::<Vec<_>>();
                    if values.iter().any(Option::is_some) {
                        table.rows.push((vec![label(d, true), c.clone()], values));
                    }
                }
            }
        }
        Layout::Table6 => {
            table.label_headers = vec!["Train".into(), "Approach".into()];
            let transfer: Vec<&MetricRow> = rows
                .iter()
                .copied()
                .filter(|r| r.transfer.is_some() && r.class != opts.negative_class)
                .collect();
            let targets: Vec<(String, String)> = {
                let mut out: Vec<(String, String)> = Vec::new();
                for r in &transfer {
                    let t = (r.key.dataset.clone(), r.class.clone());
                    if !out.contains(&t) {
                        out.push(t);
                    }
                }
                if let Some(filter) = &opts.datasets {
                    out.retain(|(d, _)| filter.contains(d));
                }
                out
            };
            let sources = first_appearance(
                transfer.iter().map(|r| r.transfer.as_ref().map_or("", |t| t.source.as_str())),
            );
            for (d, c) in &targets {
                for m in Metric::ALL {
                    table.value_headers.push(format!("{} {} {}", d, c, m.name()));
                }
            }
            for s in &sources {
                for a in APPROACHES {
                    let values = targets
                        .iter()
                        .flat_map(|(d, c)| {
                            let row = transfer.iter().find(|r| {
                                let t = r.transfer.as_ref().expect("filtered");
                                t.source == *s && t.approach == a && r.key.dataset == *d && r.class == *c
                            });
                            Metric::ALL.map(|m| row.map(|r| m.of(r)))
                        })
                        .collect::<Vec<_>>();
                    if values.iter().any(Option::is_some) {
                        table.rows.push((vec![s.clone(), approach_label(a).to_owned()], values));
                    }
                }
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::report::{RunKey, TransferTag};

    fn row(dataset: &str, over: bool, arch: &str, emb: &str, class: &str, f1: f64) -> MetricRow {
        MetricRow {
            key: RunKey {
                dataset: dataset.into(),
                oversampled: over,
                architecture: arch.into(),
                embedding: emb.into(),
            },
            transfer: None,
            class: class.into(),
            fold: Fold::Mean,
            precision: f1,
            recall: f1,
            f1,
            seed: 1,
            mode: "strict".into(),
        }
    }

    #[test]
    fn single_cell_renders_two_decimals() {
        let report = EvalReport { rows: vec![row("F", true, ATTN, "random", "bully", 0.9436)] };
        let opts = RenderOptions { embeddings: vec!["random".into()], ..Default::default() };
        let t = render_tables(&[report], Layout::Table1a, &opts);
        assert_eq!(t.rows.len(), 1);
        let md = t.to_markdown();
        assert!(md.contains("| F+ | bully | 0.94 | 0.94 | 0.94 |"), "{md}");
        assert!(t.to_csv().unwrap().contains("0.9436"));
    }

    #[test]
    fn missing_cells_are_dashes() {
        let report = EvalReport { rows: vec![row("F", false, ATTN, "glove", "bully", 0.5)] };
        let t = render_tables(&[report], Layout::Table1a, &RenderOptions::default());
        let md = t.to_markdown();
        assert!(md.contains("| F | bully | — | 0.50 | — |"), "{md}");
    }

    #[test]
    fn negative_class_and_other_folds_are_skipped() {
        let mut fold0 = row("F", false, ATTN, "random", "bully", 0.1);
        fold0.fold = Fold::Index(0);
        let report = EvalReport {
            rows: vec![fold0, row("F", false, ATTN, "random", "none", 0.9)],
        };
        let t = render_tables(&[report], Layout::Table1a, &RenderOptions::default());
        assert!(t.rows.is_empty());
    }

    #[test]
    fn transfer_layout_orders_approaches() {
        let mk = |approach: &str, f1: f64| {
            let mut r = row("Y", false, ATTN, "random", "bully", f1);
            r.transfer = Some(TransferTag { source: "W+".into(), approach: approach.into() });
            r
        };
        let report = EvalReport { rows: vec![mk("model", 0.97), mk("complete", 0.23), mk("feature", 0.74)] };
        let t = render_tables(&[report], Layout::Table6, &RenderOptions::default());
        let labels: Vec<_> = t.rows.iter().map(|(l, _)| l[1].clone()).collect();
        assert_eq!(labels, ["Complete", "Feature Level", "Model Level"]);
        assert_eq!(t.rows[2].1[2], Some(0.97));
    }

    #[test]
    fn layout_names_parse() {
        for l in Layout::ALL {
            assert_eq!(l.as_str().parse::<Layout>().unwrap(), l);
        }
        assert!("table7".parse::<Layout>().is_err());
    }
}
