//! Comparison methods: a relevance/redundancy ranking and the elastic net.

pub mod compare;
pub mod enet;
pub mod varrank;

pub use compare::{compare_predictions, write_comparison_csv, Baseline, CompareConfig, Comparison, RepeatResult};
pub use enet::{elastic_net_fit, elastic_net_fit_from, lambda1_max, ElasticNetFit, ElasticNetOptions};
pub use varrank::{varrank_select, write_varrank_scores_csv, VarrankRanking, VarrankScheme};
