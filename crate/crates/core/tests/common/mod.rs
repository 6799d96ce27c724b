#![allow(dead_code)]

use std::path::PathBuf;

use scenetg_core::explore::{explore, Exploration, ExplorationConfig};
use scenetg_core::sim::{load_app_model, simulate, AppModel};

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn fixture(rel: &str) -> AppModel {
    load_app_model(&fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn model(json: serde_json::Value) -> AppModel {
    AppModel::from_json(&json.to_string()).expect("valid model")
}

pub fn run(model: &AppModel, config: &ExplorationConfig) -> Exploration {
    let mut session = simulate(model, config.rng_seed);
    explore(&model.app_input(), &mut session, config).expect("valid config")
}

pub fn run_default(model: &AppModel) -> Exploration {
    run(model, &ExplorationConfig::default())
}

pub fn button(id: &str) -> serde_json::Value {
    serde_json::json!({"class": "android.widget.Button", "id": id, "text": id, "clickable": true})
}

pub fn page(root_id: &str, children: Vec<serde_json::Value>) -> serde_json::Value {
    serde_json::json!({"class": "android.widget.LinearLayout", "id": root_id, "children": children})
}
