//! Equality testing on graphs: lower and upper bounds on the cost of
//! deciding whether all players hold the same string, Behrend-type sets,
//! faithful hosts and bit-exact protocol simulation.

pub mod behrend;
pub mod bounds;
pub mod cli;
pub mod graph;
pub mod host;
pub mod linear;
pub mod lp;
pub mod protocol;

pub use behrend::{BehrendSet, Verdict};
pub use bounds::{bounds_report, BoundsReport, Limits};
pub use graph::{resolve_graph, Graph, GraphError};
pub use host::{build_host, verify_faithful, FaithfulHost};
pub use linear::{attack, verify_witness, LinearProtocol};
pub use protocol::{EqualityProtocol, InputAssignment, Transcript};
