//! Audit pipeline stages behind the `iris-audit` binary.
//!
//! Every stage reads only the artifacts of earlier stages plus the run
//! configuration and writes under one output directory:
//!
//! ```text
//! <out>/manifests   corpus manifests (real, fakes, curated) and the leak ledger
//! <out>/corpus      rendered and curated PNGs
//! <out>/templates   one template file per accepted image
//! <out>/scores      score CSVs per pair type and snapshot
//! <out>/reports     curation, extraction and leakage reports (JSON)
//! <out>/plots       SVG histograms and ROC curves, heatmap CSV
//! ```

pub mod config;
mod stages;

use thiserror::Error;

pub use config::RunConfig;
pub use stages::{
    cmd_curate, cmd_extract, cmd_match, cmd_report, cmd_synth, run_all, AuditReport,
    CurationReport, ExtractionReport, Layout, ReportOutcome, SetExtraction,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing {path}; run the `{stage}` stage first")]
    MissingStage { stage: &'static str, path: String },
    #[error(transparent)]
    Corpus(#[from] iris_audit::corpus::CorpusError),
    #[error(transparent)]
    Synth(#[from] iris_audit::synth::SynthError),
    #[error(transparent)]
    Encoding(#[from] iris_audit::encoding::EncodingError),
    #[error(transparent)]
    Matching(#[from] iris_audit::matching::MatchError),
    #[error(transparent)]
    Table(#[from] iris_audit::matching::TableError),
    #[error(transparent)]
    Analysis(#[from] iris_audit::analysis::AnalysisError),
    #[error("worker pool: {0}")]
    Pool(String),
}
