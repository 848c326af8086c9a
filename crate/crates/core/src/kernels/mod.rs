pub mod bottleneck;
pub mod flow;
pub mod pareto;
pub mod simplex;

pub use bottleneck::{find_bottleneck, Bottleneck, EatingNetwork};
pub use flow::FlowNetwork;
pub use pareto::{find_improvement, Improvement};
pub use simplex::{Cmp, LinearProgram, LpOutcome};
