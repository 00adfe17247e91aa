//! Metrics, significance testing and result tables.

pub mod mann_whitney;
pub mod metrics;
pub mod report;
pub mod tables;

pub use mann_whitney::{mann_whitney_u, MannWhitney};
pub use metrics::{confusion_counts, precision_recall_f1, ConfusionMatrix, Prf};
pub use report::{EvalReport, Fold, MetricRow, RowContext, RunKey, TransferTag, RESULTS_HEADER, TRANSFER_HEADER};
pub use tables::{render_tables, Layout, RenderOptions, RenderedTable};
