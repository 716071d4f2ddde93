//! Segmentation and synapse accuracy metrics and the synthetic
//! detect-and-correct evaluation loop.

mod are;
mod run;

pub use are::{adapted_rand_error, adapted_rand_error_pairs, synapse_accuracy};
pub use run::{render_csv, render_report, run_synthetic_loop, LoopReport, ReportRow};
