//! Demonstrator behaviour analysis for the kitchen simulator: per-action
//! records, game embeddings, K-medoids clustering and the statistical tests
//! used to compare experimental conditions.

pub mod cluster;
pub mod encode;
pub mod quad;
pub mod records;
pub mod report;
pub mod stats;

use thiserror::Error;

pub use cluster::{distance, k_medoids, matching_matrix, select_clustering, silhouette, ClusteringResult, MatchingMatrix, Point};
pub use encode::{
    encode_trajectories, summary_feature_names, summary_features, GameTrajectory, PrincipalEncoder, TrajectoryEmbedding,
    TrajectoryEncoder, SUMMARY_LEN,
};
pub use records::{extract_records, ActionKind, HeldKind, StateActionRecord};
pub use report::{anova_table, cluster_report, comparison_table, metric_report, normality_table, ClusterReport, MetricReport};
pub use stats::{
    bartlett, chi2_sf, f_sf, one_way_anova, ptukey_sf, qtukey, shapiro_wilk, tukey_kramer, AnovaRow, PairwiseComparison,
    TestReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("trajectory has no records")]
    EmptyTrajectory,
    #[error("every feature is constant across the dataset")]
    DegenerateDataset,
    #[error("k = {k} is not valid for {n} points")]
    InvalidK { k: usize, n: usize },
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("sample of {n} is below the minimum of {min}")]
    SampleTooSmall { n: usize, min: usize },
    #[error("sample of {n} exceeds the maximum of {max}")]
    SampleTooLarge { n: usize, max: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("at least two groups are needed, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is too small or has zero variance")]
    DegenerateGroup(usize),
    #[error("degenerate groups: {0}")]
    DegenerateGroups(String),
    #[error("quadrature did not converge (estimate {estimate}, error {error})")]
    QuadratureNonConvergence { estimate: f64, error: f64 },
}
