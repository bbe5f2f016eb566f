//! Evaluation methodology: pooled binary classification metrics over full
//! candidate pools, cutoff-based ranking baselines, per-query scores for
//! significance testing, and the six-cell cross-domain transfer grid.

mod grid;
mod metrics;
pub mod reference;
mod report;
mod ttest;

pub use grid::{
    run_cross_domain_matrix, CrossDomainGrid, DomainInputs, GridCell, TestSetResults,
};
pub use metrics::{
    cutoff_evaluate, decisions_from_cutoff, decisions_from_predictions, per_query_f1,
    pooled_binary_metrics, CutoffConfig, Decisions, EvalReport,
};
pub use report::{render_table, write_report_jsonl, ReportRow};
pub use ttest::{paired_t_test, student_t_two_sided_p, SignificanceResult};
