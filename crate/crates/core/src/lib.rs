//! Deterministic discrete-event simulator for HPC batch job scheduling,
//! resource management and DAG workflow execution.
//!
//! ```text
//! workload / workflow ──▶ wait queue ──▶ scheduling policy ──▶ resource pool ──▶ executor
//!                              ▲                                                   │
//!                              └──────────────── completion events ◀───────────────┘
//! ```
//!
//! The [`sim`] module owns the clock and the event queue. [`engine`] wires a
//! [`workload::Workload`] or a [`workflow::WorkflowSpec`] through one of the
//! [`scheduler`] policies and a [`resource::ResourcePool`], producing a
//! [`metrics::MetricsLog`] that the exporters turn into CSV/JSON.

pub mod cli;
pub mod engine;
pub mod metrics;
pub mod resource;
pub mod scheduler;
pub mod sim;
pub mod workflow;
pub mod workload;

pub use engine::{run_batch, run_workflow, SimulationConfig, SimulationInput, SimulationResult};
pub use metrics::{JobRecord, MetricsLog, StepSeries, SummaryStats};
pub use resource::ResourcePool;
pub use scheduler::{Policy, PolicyRegistry, SchedulingPolicy};
pub use sim::{EventPayload, EventQueue, EventRecord, SimTime};
pub use workflow::{Dag, Task, TaskId, TaskState, WorkflowSpec};
pub use workload::{Job, JobState, TraceFormat, Workload};
