//! Ground truth, retrieval metrics and statistical checks of the hash
//! family's occupancy and bit independence.

pub mod ground_truth;
pub mod independence;
pub mod metrics;
pub mod occupancy;
pub mod protocol;
pub mod report;
pub mod stats;

pub use ground_truth::{exact_knn, exact_knn_excluding, GroundTruth};
pub use independence::{
    bit_independence_test, codes_over_random_families, BitPairTest, IndependenceReport, PairKind,
};
pub use metrics::{average_precision, mean_average_precision, pr_curve, PrPoint};
pub use occupancy::{cross_table_occupancy, occupancy_stats, CellHistogram, OccupancyReport};
pub use protocol::{
    build_model, evaluate_model, evaluate_split, grid_search_psi, psi_grid, run_protocol,
    sample_training_set, score_retrieval, split_dataset, RetrievalScores, Split,
};
pub use report::{EvalReport, RankedPrPoint, Timings};
pub use stats::{chi_square_2x2, chi_square_gof, chi_square_uniform, entropy_bits, ChiSquareTest};
