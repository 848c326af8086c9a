//! Exact division of a one-dimensional cake among agents with piecewise
//! constant value densities. Three allocation mechanisms (simultaneous
//! eating, market equilibrium, serial dictatorship lotteries), checkers for
//! the fairness and efficiency properties they do and do not satisfy, and a
//! search harness for profitable misreports.
//!
//! All mechanism arithmetic is exact over big rationals. Floating point
//! appears in exactly two places: the optional iterative equilibrium solver
//! and human-facing decimal rendering.

pub mod ccea;
pub mod csd;
pub mod error;
pub mod fixtures;
pub mod gen;
pub mod kernels;
pub mod mea;
pub mod model;
pub mod props;
pub mod rational;
pub mod report;

pub use ccea::{run_ccea, CceaRun};
pub use csd::{run_cmsd, run_crsd, run_csd, run_csd_sampled, CmsdRun, CsdRun, PERMUTATION_CAP};
pub use error::{Error, Result};
pub use fixtures::{demo_profile, run_all as run_fixtures, FixtureResult};
pub use gen::{generate, GenSpec};
pub use mea::{run_mea, MeaRun, SolveMode};
pub use model::{parse_allocation, parse_profile, serialize_allocation, serialize_profile, Profile};
pub use props::{
    find_manipulation, Evaluation, Manipulation, Mechanism, MechanismOutput, MisreportSpace,
    Property, PropertyReport, SearchOutcome, SearchStrategy, Verdict, Witness,
};
pub use rational::{format_decimal, format_rat, parse_rat, Rat};
