mod common;

use std::fs;

use common::{fixture, run_default};
use scenetg_core::diff::{diff_graphs, ChangeKind, DiffSummary, Version};
use scenetg_core::graph;

fn version(rel: &str) -> Version {
    let run = run_default(&fixture(rel));
    Version::new(run.scenetg, &run.layouts).unwrap()
}

fn summary(updates: usize, added: usize, pairs: usize) -> DiffSummary {
    DiffSummary {
        scene_updates: updates,
        added_scenes: added,
        added_pairs: pairs,
        ..Default::default()
    }
}

#[test]
fn drawer_entry_added() {
    let report = diff_graphs(&version("versions/drawer_v1.json"), &version("versions/drawer_v2.json"));
    assert_eq!(report.summary, summary(1, 1, 1));
    let update = &report.scene_updates[0];
    assert_eq!(update.changes.len(), 1);
    assert_eq!(update.changes[0].kind, ChangeKind::Added);
    assert_eq!(update.changes[0].resource_id, "user_asset_setting");
    assert_eq!(report.added_pairs[0].component.resource_id.as_deref(), Some("user_asset_setting"));
}

#[test]
fn picker_option_added() {
    let report = diff_graphs(&version("versions/spinner_v1.json"), &version("versions/spinner_v2.json"));
    assert_eq!(report.summary, summary(1, 0, 1));
    assert_eq!(report.scene_updates[0].changes[0].resource_id, "protocol_vless");
}

#[test]
fn nested_menu_item_added() {
    let report = diff_graphs(&version("versions/menu_v1.json"), &version("versions/menu_v2.json"));
    assert_eq!(report.summary, summary(1, 1, 1));
    let added = &report.added_scenes[0];
    let tail: Vec<_> = added.path.iter().map(|s| s.resource_id.as_str()).collect();
    assert_eq!(tail, ["more", "more_actions", "restart_service"]);
}

#[test]
fn reversed_diff_mirrors_forward() {
    let report = diff_graphs(&version("versions/drawer_v2.json"), &version("versions/drawer_v1.json"));
    assert_eq!(
        report.summary,
        DiffSummary { scene_updates: 1, removed_scenes: 1, removed_pairs: 1, ..Default::default() }
    );
    assert_eq!(report.scene_updates[0].changes[0].kind, ChangeKind::Deleted);
}

#[test]
fn identical_versions_diff_empty() {
    for rel in ["versions/menu_v1.json", "benchmark/app03.json"] {
        let report = diff_graphs(&version(rel), &version(rel));
        assert!(report.summary.is_empty(), "{rel}: {:?}", report.summary);
    }
}

#[test]
fn load_from_exploration_output() {
    let run = run_default(&fixture("versions/spinner_v1.json"));
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("layouts")).unwrap();
    for (id, xml) in &run.layouts {
        fs::write(dir.path().join("layouts").join(format!("{id}.xml")), xml).unwrap();
    }
    fs::write(dir.path().join("scenetg.json"), graph::to_json(&run.scenetg, &run.atg)).unwrap();
    let loaded = Version::load(dir.path()).unwrap();
    let fresh = Version::new(run.scenetg.clone(), &run.layouts).unwrap();
    assert!(diff_graphs(&loaded, &fresh).summary.is_empty());
    assert_eq!(loaded.layouts.len(), run.scenetg.nodes().len());
}
