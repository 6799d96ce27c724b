//! Activity-level breadth-first, scene-level depth-first exploration.

pub mod config;
pub mod engine;
pub mod fuzz;
pub mod report;
pub mod trace;

pub use config::ExplorationConfig;
pub use engine::{explore, Exploration, ExploreError, Explorer, Route};
pub use fuzz::{
    apply_assignment, fuzz_assignments, non_transitive_kind, ApplySummary, FuzzAssignment, FuzzEntry, FuzzValue,
    NonTransitiveKind, UiAction,
};
pub use report::{ActivityOutcome, ActivityReport, ExplorationReport, StopReason};
pub use trace::TraceRecord;
