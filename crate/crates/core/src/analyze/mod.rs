//! Exact checks and inventories on finite point clouds.

pub mod angles;
pub mod cloud;
pub mod direction;
pub mod distance;
pub mod falconer;
pub mod radial;
pub mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use angles::{angle_inventory, angle_report, AngleCertificate, AngleReport};
pub use cloud::{integer_grid, CloudError, PointCloud, Provenance};
pub use direction::{direction_report, DirectionReport};
pub use distance::{distance_report, DistanceReport};
pub use falconer::{
    c_cover_bound, falconer_a, falconer_angle_check, falconer_c_cover, CoveringDoc, FalconerReport, IntervalCovering,
};
pub use radial::{chord, radial_projection};
pub use verify::{verify_exclusion, verify_transversals, VerifyReport, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzeError {
    #[error("cloud has dimension {got}, spec expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("needs dimension at least 2, got {0}")]
    NeedsPlane(usize),
    #[error("no point with index {0}")]
    BadIndex(usize),
    #[error("points {0} and {1} coincide")]
    Coincident(usize, usize),
    #[error("spec takes {expected} points, got {got} groups")]
    GroupCount { expected: usize, got: usize },
}

/// Everything `analyze` reports on one cloud; sections that do not apply
/// are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub points: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<AngleReport>,
    pub distances: DistanceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<DirectionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub falconer: Option<FalconerReport>,
}
