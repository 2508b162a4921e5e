//! Linear multivariate regression: PCA, principal component regression with
//! ridge, NIPALS partial least squares and sequential cross-validation.

pub mod cv;
pub mod metrics;
pub mod pca;
pub mod pcr;
pub mod plsr;

pub use cv::{sequential_cv, CvParams, CvReport, ModelKind};
pub use metrics::{regression_metrics, TargetMetrics};
pub use pca::{pca_fit, PcaFactorization};
pub use pcr::{pcr_fit, pcr_fit_on_pca, PcrModel, DEFAULT_RIDGE_ALPHAS};
pub use plsr::{plsr_fit, NipalsParams, PlsrModel};

/// Version stamp written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;
