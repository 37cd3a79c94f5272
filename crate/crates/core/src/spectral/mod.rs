//! Finite-volume spectral analysis of `P_V`.

pub mod eigen;
pub mod essential;
pub mod gap;
pub mod operator;
pub mod report;

use thiserror::Error;

use crate::resolvent::ResolventError;

pub use eigen::{eigensolve_top, full_spectrum, inverse_iteration, perron_pair, BandedSym, Eigenpair, TopEigenpairs};
pub use essential::{essential_spectrum_predictor, lambda_pm_1d, EssentialPrediction};
pub use gap::{
    bipartite_detect, diag_dominance_check, edge_inequality_check, gap_projection_test,
    BipartiteSign, DominanceCheck, EdgeCheck, ProjectionFit,
};
pub use operator::TruncatedOperator;
pub use report::{spectral_report, SpectralReport, SpectralStudy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("box with {sites} sites exceeds the cap of {cap}")]
    BoxTooLarge { sites: usize, cap: usize },
    #[error("box radius {radius} is below the minimum {min}")]
    BoxTooSmall { radius: i64, min: i64 },
    #[error("kernel dimension {kernel} differs from potential dimension {potential}")]
    DimensionMismatch { kernel: usize, potential: usize },
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no root of g(0) = 1 + 1/v above 1 for v = {v}")]
    NoRootAboveOne { v: f64 },
    #[error("discrete eigenvalues did not stabilize: {detail}")]
    NotStabilized { detail: String },
    #[error("neither -r < l nor a bipartite sign: r = {r}, l = {ell}")]
    GapNotCertified { r: f64, ell: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
}
