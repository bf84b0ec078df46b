//! Estimation and testing of a trend in the probability of extreme events.
//!
//! Given independent samples at time points `0 = s_0 < s_1 < ... < s_m`, the
//! model assumes
//!
//! ```text
//! (1 - F_s(x)) / (1 - F_0(x)) -> exp(c s)   as x tends to the right endpoint,
//! ```
//!
//! with all `F_s` in the domain of attraction of the same extreme value law.
//! The crate provides three estimators of `c` built from the top `k + 1` order
//! statistics of each sample ([`trend`]), their asymptotic variances and
//! chi-squared tests of `c = 0` ([`inference`]), a Monte Carlo engine for
//! checking them ([`simulate`]), and a pipeline that turns daily station
//! rainfall into block panels ([`ingest`]).

pub mod error;
pub mod evt;
pub mod inference;
pub mod ingest;
pub mod simulate;
pub mod trend;

pub use error::{Error, ErrorKind, Result};
pub use evt::{
    combined_index, hill_estimator, moment_estimator, moment_scale, tail_slice, Group,
    IndexEstimate, IndexVariant, ScaleEstimate, TailSlice,
};
pub use inference::{
    chisq_cdf, chisq_quantile, se_c2, test_q1, test_q2, var_c1, var_c2, var_c3, TestReport,
    VarianceInputs,
};
pub use ingest::{BlockPanel, DailySeries, DeclusterConfig, YearWindow};
pub use simulate::{run_design, Family, SimDesign, SimResult};
pub use trend::{
    estimate, estimate_c1, estimate_c2, estimate_c3, relative_risk_path,
    risk_change_per_period, Estimator, SamplePanel, TrendFit,
};
