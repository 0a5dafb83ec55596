//! Distances between laws and paths, rate regression and distributional tests.

pub mod dbl;
pub mod fit;
pub mod stats;

pub use crate::path::sup_path_distance;
pub use dbl::{abs_metric, dbl_distance, euclid_metric, total_variation};
pub use fit::{fit_rate, RateFit};
pub use stats::{excess_kurtosis, ks_normal_test, mean_se, sample_variance, Estimate};
