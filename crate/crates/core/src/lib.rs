//! Conformance checking of event logs with uncertainty against Data Petri nets,
//! by encoding the joint search for a realization and an optimal alignment as
//! an SMT optimization problem.

pub mod cost;
pub mod decode;
pub mod dpn;
pub mod examples;
pub mod log;
pub mod oracle;
pub mod pipeline;
pub mod rational;
pub mod smt;
pub mod solver;

pub use decode::DecodedResult;
pub use pipeline::{check_trace, CheckError, CheckOptions, TraceOutcome};
pub use solver::{Profile, SolverConfig};
pub use cost::{total_cost, Alignment, CostFunctions, CostReport, Mode, Move};
pub use dpn::{Dpn, DpnBuilder, Expr, Transition, TransitionFiring, Value, VarType};
pub use log::{Event, Realization, UncertainEvent, UncertainTrace};
pub use rational::{Cost, Rational};
