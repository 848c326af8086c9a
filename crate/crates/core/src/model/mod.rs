//! Cake model: densities, profiles, refined partitions, fractional
//! assignments, and concrete allocations.

pub mod allocation;
pub mod assignment;
pub mod density;
pub mod interval;
pub mod json;
pub mod partition;
pub mod profile;

pub use allocation::{draw_uniform_offset, materialize, rotate_cell, Allocation, Coordinates, Layout};
pub use assignment::FractionalAssignment;
pub use density::{DensityError, PiecewiseDensity};
pub use interval::{
    interior_disjoint, intersect_pieces, normalize_pieces, subtract_pieces, total_len,
    unit_interval, Interval,
};
pub use json::{parse_allocation, parse_profile, serialize_allocation, serialize_profile};
pub use partition::{free_disposal, refine, OriginMap, RefinedPartition};
pub use profile::{Agent, Profile};
