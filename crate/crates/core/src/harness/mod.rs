//! Experiment harness: BD-rate, the generated mini-corpus, QP sweeps and
//! CSV reports.

pub mod bdrate;
pub mod corpus;
pub mod experiment;
pub mod train;

pub use bdrate::{bd_rate, BdError, RdCurve};
pub use corpus::{load_corpus, mini_corpus, write_corpus, CorpusItem};
pub use experiment::{
    additivity, comparisons, measure, run_comparisons, run_experiment, time_ratio, Additivity, BdRates,
    Comparison, ExperimentKind, ExperimentOptions, ExperimentReport, HarnessError, Measurement, ReportRow,
    AVERAGE_CLASS, EXPERIMENT_QPS,
};
