//! Species richness estimation from frequency-count data when the singleton
//! count cannot be trusted.
//!
//! The ratios `f_{j+1}/f_j` of a frequency-count table are modelled by a
//! rational function of `j`, fitted by weighted nonlinear least squares. The
//! fitted curve predicts the singleton count and the number of unobserved taxa,
//! and a delta-method calculation under a multinomial model gives the standard
//! error of the richness estimate.
//!
//! ```
//! use richness::freqtab::FrequencyCountTable;
//! use richness::estimators::breakaway_nof1;
//!
//! let table = FrequencyCountTable::from_pairs([(2, 64), (3, 32), (4, 16), (5, 8), (6, 4)]).unwrap();
//! let est = breakaway_nof1(&table).unwrap();
//! assert!((est.c_hat - 508.0).abs() < 1e-6);
//! ```

pub mod cli;
pub mod error;
pub mod estimators;
pub mod freqtab;
pub mod ratiofit;
pub mod simlab;

pub use error::{Error, Result};
pub use estimators::{EstimatorKind, RichnessEstimate};
pub use freqtab::FrequencyCountTable;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
