//! Business-type classification from business names, with tooling to
//! measure and reduce the influence of personal names on predictions.
//!
//! The pipeline: [`ingest`] turns municipal business-licence CSVs into
//! labelled records, [`classifier`] trains a linear bag-of-tokens model
//! over them, [`nametext`] recognises and rewrites given names inside
//! business names, and [`evalbias`] scores models and quantifies how far
//! predictions move when only the personal name in a text changes.
//! [`cli`] wires the pieces into a command-line tool.

pub mod classifier;
pub mod cli;
pub mod error;
pub mod evalbias;
pub mod ingest;
pub mod nametext;

pub use classifier::{train, Hyperparams, Model, Prediction, TrainMode, Vocab};
pub use error::{Error, Result};
pub use evalbias::{
    aggregate_runs, bias_audit, bias_imbalance, evaluate, precision_recall_at_k, AuditConfig,
    BiasReport, EvalReport, Predictor, ProbeSource, RunStats,
};
pub use ingest::{build_dataset, split, LabelSpace, Record, SplitSpec};
pub use nametext::{gender_swap_augment, mask_names, tokenize, EvalLists, MaskPolicy, NameLexicon};
