//! Correlation, convergence, stationarity and ergodicity statistics.

pub mod acf;
pub mod adf;
pub mod ergodicity;
pub mod hypothesis;
pub mod moments;
pub mod pearson;
pub mod rconv;
pub mod surface;

pub use acf::{autocorrelation, frequency_autocorrelation, FrequencyAcf, DECORRELATION_LEVEL};
pub use adf::{adf_test, mackinnon_crit, mackinnon_p, AdfResult, LagRule};
pub use ergodicity::{
    ergodicity_partition_test, ergodicity_partition_test_with, ErgodicityReport, PartitionResult,
    PartitionScheme,
};
pub use hypothesis::{runs_test, t_test_two_sample, welch_t_test, RunsResult, TTestResult};
pub use moments::{moments_and_normality, MomentsReport};
pub use pearson::{pearson_r, PearsonResult};
pub use rconv::{analytic_r, analytic_r_curve, simulate_r_convergence, RCurve, RSimConfig};
pub use surface::{r_vs_window, RSurface, SurfaceCell};
