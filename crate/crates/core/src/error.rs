//! Error type shared by the core modules.

use core::fmt;

/// Errors produced by core operations.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A box, cylinder or camera violated its invariants.
    InvalidGeometry(&'static str),
    /// A depth (or inverse depth) value was required to be positive and was not.
    NonPositiveDepth,
    /// A query box had no overlap with the depth raster.
    BoxOutsideImage,
    /// Feature vectors of mismatched dimension were compared.
    FeatureDimMismatch { expected: usize, got: usize },
    /// The innovation covariance was singular; the filter parameters are degenerate.
    SingularCovariance,
    /// A covariance block was not positive semidefinite.
    NotPositiveSemidefinite,
    /// An aggregate was requested over an empty history.
    EmptyHistory,
    /// Frames must be presented in strictly increasing order.
    OutOfOrderFrame { last: u64, got: u64 },
    /// A depth raster was required but not supplied.
    MissingDepth { frame: u64 },
    /// A scenario walker crossed the camera plane.
    WalkerBehindCamera { walker: usize, frame: u64 },
    /// A parameter was outside its documented domain.
    InvalidParameter(&'static str),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidGeometry(what) => write!(f, "invalid geometry: {what}"),
            CoreError::NonPositiveDepth => write!(f, "depth values must be positive"),
            CoreError::BoxOutsideImage => {
                write!(f, "box does not overlap the image; measurement unobservable")
            }
            CoreError::FeatureDimMismatch { expected, got } => {
                write!(f, "feature dimension mismatch: expected {expected}, got {got}")
            }
            CoreError::SingularCovariance => write!(f, "singular innovation covariance"),
            CoreError::NotPositiveSemidefinite => {
                write!(f, "covariance block is not positive semidefinite")
            }
            CoreError::EmptyHistory => write!(f, "empty depth history"),
            CoreError::OutOfOrderFrame { last, got } => {
                write!(f, "frame {got} not after frame {last}")
            }
            CoreError::MissingDepth { frame } => {
                write!(f, "no depth raster for frame {frame}")
            }
            CoreError::WalkerBehindCamera { walker, frame } => {
                write!(f, "walker {walker} reaches Z <= 0 at frame {frame}")
            }
            CoreError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

impl core::error::Error for CoreError {}
