//! Benchmark runner: loads task bundles, drives episodes, scores them and
//! reports exact-match accuracy, completion and cost.

pub mod bench;
pub mod config;
pub mod report;

pub use bench::{rescore, run_benchmark, score_case};
pub use config::{HarnessConfig, TokenPricing};
pub use report::{BenchmarkReport, CaseRow};
