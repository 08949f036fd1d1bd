//! Offline evaluation: dataset ingestion, ROC metrics and the per-speaker
//! enrollment protocol comparing best-match and mean cosine scoring.

mod dataset;
mod metrics;
mod protocol;
pub mod synthetic;

pub use dataset::{embed_dataset, load_dataset, split_counts, Embedded, LabeledUtterance, LoadedDataset, Rejection, Split};
pub use metrics::{auc, classify_at, compute_roc, eer_and_threshold, Classification, RocCurve, RocPoint};
pub use protocol::{run_protocol, Cell, EvalReport, Method, Metrics, ProtocolConfig, Skipped, SpeakerResult};
pub use synthetic::GaussianSpeakers;
