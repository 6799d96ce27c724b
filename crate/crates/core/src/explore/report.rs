use serde::{Deserialize, Serialize};

use crate::driver::LaunchReason;
use crate::graph::Stats;

use super::config::ExplorationConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActivityOutcome {
    Direct,
    /// Reached through the given caller chain, head first, target last.
    Indirect { chain: Vec<String> },
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityReport {
    pub name: String,
    pub outcome: ActivityOutcome,
    pub attempts: u32,
    /// Reason of the last failed direct launch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub launch_reason: Option<LaunchReason>,
    /// Driver error that cut this activity's exploration short.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Every activity was explored.
    QueueEmpty,
    /// Activities remain but the last round added no ATG edge.
    AtgNotAugmented,
    /// Activities remain and indirect launching is off.
    IndirectDisabled,
    Timeout,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationReport {
    pub package: String,
    pub seed: u64,
    pub config: ExplorationConfig,
    /// One entry per input activity, in input order.
    pub activities: Vec<ActivityReport>,
    pub rounds: u32,
    pub stop_reason: StopReason,
    /// Set when a timeout or step budget ended the run early.
    pub partial: bool,
    pub steps: u64,
    pub wall_time_ms: u64,
    pub stats: Stats,
}

impl ExplorationReport {
    pub fn activity(&self, name: &str) -> Option<&ActivityReport> {
        self.activities.iter().find(|a| a.name == name)
    }
}
