//! Nested ball-tree constructions: schedules, nets, trees, measures and
//! dimension estimates.

pub mod dimension;
pub mod measure;
pub mod net;
pub mod schedule;
pub mod tree;

pub use dimension::{box_counting_dimension, DimensionEstimate};
pub use measure::{ball_mass_bound_check, MeasureEstimate};
pub use net::{packing_constants, separated_subset, GridNet, NetGenerator, StageNet};
pub use schedule::{make_schedule, radius_b, validate_schedule, Schedule, ScheduleMode};
pub use tree::{build_tree, BallNode, BallTree, TreeError};
