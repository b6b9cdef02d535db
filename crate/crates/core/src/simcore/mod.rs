//! Deterministic discrete-event simulation of the LEO topology.

pub mod config;
pub mod engine;
pub mod node;
pub mod radio;
pub mod schedule;
pub mod topology;
pub mod trace;

pub use config::{Preset, ScenarioConfig, Span};
pub use engine::{run_scenario, SimOutput};
pub use node::{NodeId, NodeKind, SAT_RELAY, SAT_ZONE1, SAT_ZONE2};
pub use radio::{compute_snir, Emission};
pub use schedule::{preset_runs, run_schedule, Schedule, ScheduleEntry};
pub use topology::{build_topology, Hop, Link, Topology};
pub use trace::{Outcome, PacketType, Stat, TraceRecord, VectorSample};
