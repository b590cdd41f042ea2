//! Conformance checking of object-centric Petri nets against object-centric
//! event logs: context-based fitness and precision.

pub mod cli;
pub mod context;
pub mod metrics;
pub mod ocel;
pub mod ocpn;
pub mod replay;
pub mod simulate;

pub use context::{build_graph, Context, ContextIndex, EventObjectGraph};
pub use metrics::{check, fitness, precision, ConformanceReport, EventDiagnostic, MetricsError};
pub use ocel::{parse_log, serialize_log, EventLog, LogError};
pub use ocpn::{flower_model, parse_model, serialize_model, AcceptingOcpn, Binding, Marking, NetError};
pub use replay::{ReplayConfig, SilentVariableMode};
pub use simulate::{simulate, SimulationConfig};
