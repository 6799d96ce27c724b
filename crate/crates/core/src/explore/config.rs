use serde::{Deserialize, Serialize};

/// Knobs for one exploration run. Timeouts are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationConfig {
    pub analysis_timeout: f64,
    pub dynamic_timeout: f64,
    pub rng_seed: u64,
    pub fuzz_component_cap: usize,
    pub enable_fuzzing: bool,
    pub enable_indirect: bool,
    pub enable_scene_id: bool,
    pub max_depth_per_activity: usize,
    /// Optional cap on driver actions, for runs that must be comparable
    /// independently of machine speed.
    pub step_budget: Option<u64>,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            analysis_timeout: 900.0,
            dynamic_timeout: 1800.0,
            rng_seed: 0,
            fuzz_component_cap: 6,
            enable_fuzzing: true,
            enable_indirect: true,
            enable_scene_id: true,
            max_depth_per_activity: 20,
            step_budget: None,
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("analysis_timeout", self.analysis_timeout),
            ("dynamic_timeout", self.dynamic_timeout),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be a positive number of seconds, got {v}"));
            }
        }
        if self.max_depth_per_activity == 0 {
            return Err("max_depth_per_activity must be at least 1".into());
        }
        if self.fuzz_component_cap > 16 {
            return Err(format!(
                "fuzz_component_cap {} would enumerate more than 65536 states",
                self.fuzz_component_cap
            ));
        }
        Ok(())
    }
}
