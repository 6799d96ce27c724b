//! Differences between the scene graphs of two app versions.
//!
//! Scenes are paired by owning activity and event path; paired scenes are
//! compared node by node, and transition pairs are compared after mapping
//! old scene ids onto their new partners.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{self, EventKind, GraphError, PathKey, SceneEdge, SceneNode, SceneTg};
use crate::layout::{parse_hierarchy_dump, ComponentNode, ComponentTree, LayoutError};
use crate::scene::{normalize, SceneId};

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Graph { path: String, source: GraphError },
    #[error("{path}: {source}")]
    Layout { path: String, source: LayoutError },
}

/// One explored version: its scene graph plus the layout of every scene.
#[derive(Debug, Clone)]
pub struct Version {
    pub scenetg: SceneTg,
    pub layouts: BTreeMap<SceneId, ComponentTree>,
}

impl Version {
    /// Parses in-memory layouts, e.g. straight from an exploration.
    pub fn new(scenetg: SceneTg, layouts: &BTreeMap<SceneId, String>) -> Result<Self, DiffError> {
        let mut trees = BTreeMap::new();
        for node in scenetg.nodes() {
            if let Some(xml) = layouts.get(&node.id) {
                let tree = parse_hierarchy_dump(xml, &node.owning_activity).map_err(|source| DiffError::Layout {
                    path: node.layout_ref.clone(),
                    source,
                })?;
                trees.insert(node.id.clone(), tree);
            }
        }
        Ok(Self { scenetg, layouts: trees })
    }

    /// Loads `scenetg.json` and the layout files it references from an
    /// exploration output directory.
    pub fn load(dir: &Path) -> Result<Self, DiffError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| DiffError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let index = dir.join("scenetg.json");
        let (scenetg, _) = graph::from_json(&read(&index)?).map_err(|source| DiffError::Graph {
            path: index.display().to_string(),
            source,
        })?;
        let mut layouts = BTreeMap::new();
        for node in scenetg.nodes() {
            layouts.insert(node.id.clone(), read(&dir.join(&node.layout_ref))?);
        }
        Self::new(scenetg, &layouts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChangeKind {
    Added,
    Deleted,
    PropertyChanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyChange {
    pub attribute: String,
    pub old: String,
    pub new: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeChange {
    pub kind: ChangeKind,
    /// Child-index path in the normalized new tree, or the old tree for
    /// deletions.
    pub path: Vec<usize>,
    pub resource_id: String,
    pub widget_class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<PropertyChange>,
}

/// Attributes compared on aligned nodes.
pub const TRACKED_ATTRIBUTES: [&str; 5] = ["resource_id", "class", "package", "text", "clickable"];

/// Attributes that feed the scene identifier.
pub const SIGNATURE_ATTRIBUTES: [&str; 3] = ["resource_id", "class", "package"];

fn attribute(n: &ComponentNode, name: &str) -> String {
    match name {
        "resource_id" => n.resource_id.clone(),
        "class" => n.widget_class.clone(),
        "package" => n.package.clone(),
        "text" => n.text.clone(),
        "clickable" => n.clickable.to_string(),
        _ => unreachable!("untracked attribute {name}"),
    }
}

fn change(kind: ChangeKind, path: &[usize], n: &ComponentNode, detail: Option<PropertyChange>) -> NodeChange {
    NodeChange {
        kind,
        path: path.to_vec(),
        resource_id: n.resource_id.clone(),
        widget_class: n.widget_class.clone(),
        detail,
    }
}

/// Pairs children: equal non-empty (resource_id, class) first, then the
/// remaining id-less children by position.
fn align(old: &[ComponentNode], new: &[ComponentNode]) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    let mut pairs = Vec::new();
    let mut used_new = vec![false; new.len()];
    let mut old_left = Vec::new();
    for (i, o) in old.iter().enumerate() {
        let hit = (!o.resource_id.is_empty())
            .then(|| {
                (0..new.len()).find(|&j| {
                    !used_new[j] && new[j].resource_id == o.resource_id && new[j].widget_class == o.widget_class
                })
            })
            .flatten();
        match hit {
            Some(j) => {
                used_new[j] = true;
                pairs.push((i, j));
            }
            None => old_left.push(i),
        }
    }
    let new_left: Vec<usize> = (0..new.len()).filter(|&j| !used_new[j]).collect();
    let old_anon: Vec<usize> = old_left.iter().copied().filter(|&i| old[i].resource_id.is_empty()).collect();
    let new_anon: Vec<usize> = new_left.iter().copied().filter(|&j| new[j].resource_id.is_empty()).collect();
    let positional = old_anon.len().min(new_anon.len());
    pairs.extend(old_anon.iter().zip(&new_anon).map(|(&i, &j)| (i, j)));
    let deleted = old_left.into_iter().filter(|i| !old_anon[..positional].contains(i)).collect();
    let added = new_left.into_iter().filter(|j| !new_anon[..positional].contains(j)).collect();
    pairs.sort_by_key(|&(_, j)| j);
    (pairs, deleted, added)
}

/// Level-order comparison of two pages after the same filtering and
/// adapter collapsing the scene identifier uses. An added or deleted subtree
/// is reported once, at its root.
pub fn diff_trees(old: &ComponentTree, new: &ComponentTree, target_package: &str) -> Vec<NodeChange> {
    let (a, b) = (normalize(&old.root, target_package), normalize(&new.root, target_package));
    let (a, b) = match (a, b) {
        (None, None) => return Vec::new(),
        (Some(a), None) => return vec![change(ChangeKind::Deleted, &[], &a, None)],
        (None, Some(b)) => return vec![change(ChangeKind::Added, &[], &b, None)],
        (Some(a), Some(b)) => (a, b),
    };
    let mut out = Vec::new();
    let mut queue: VecDeque<(&ComponentNode, &ComponentNode, Vec<usize>, Vec<usize>)> =
        VecDeque::from([(&a, &b, Vec::new(), Vec::new())]);
    while let Some((o, n, opath, npath)) = queue.pop_front() {
        for attr in TRACKED_ATTRIBUTES {
            let (ov, nv) = (attribute(o, attr), attribute(n, attr));
            if ov != nv {
                let detail = PropertyChange {
                    attribute: attr.to_string(),
                    old: ov,
                    new: nv,
                };
                out.push(change(ChangeKind::PropertyChanged, &npath, n, Some(detail)));
            }
        }
        let (pairs, deleted, added) = align(&o.children, &n.children);
        for i in deleted {
            let mut p = opath.clone();
            p.push(i);
            out.push(change(ChangeKind::Deleted, &p, &o.children[i], None));
        }
        for j in added {
            let mut p = npath.clone();
            p.push(j);
            out.push(change(ChangeKind::Added, &p, &n.children[j], None));
        }
        for (i, j) in pairs {
            let (mut op, mut np) = (opath.clone(), npath.clone());
            op.push(i);
            np.push(j);
            queue.push_back((&o.children[i], &n.children[j], op, np));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenePair {
    pub activity: String,
    pub path: PathKey,
    pub old: SceneId,
    pub new: SceneId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneRef {
    pub id: SceneId,
    pub activity: String,
    pub path: PathKey,
}

impl From<&SceneNode> for SceneRef {
    fn from(n: &SceneNode) -> Self {
        Self {
            id: n.id.clone(),
            activity: n.owning_activity.clone(),
            path: n.path.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SceneMatching {
    pub pairs: Vec<ScenePair>,
    pub added: Vec<SceneRef>,
    pub removed: Vec<SceneRef>,
    /// Scenes sharing their (activity, path) with an earlier-discovered
    /// scene of the same version; left out of the pairing.
    pub ambiguous: Vec<SceneRef>,
}

type MatchKey = (String, PathKey);

fn keyed(tg: &SceneTg, ambiguous: &mut Vec<SceneRef>) -> BTreeMap<MatchKey, SceneRef> {
    let mut nodes: Vec<&SceneNode> = tg.nodes().iter().collect();
    nodes.sort_by(|a, b| (a.discovered_at, &a.id).cmp(&(b.discovered_at, &b.id)));
    let mut out = BTreeMap::new();
    for n in nodes {
        let key = (n.owning_activity.clone(), n.path.clone());
        if out.contains_key(&key) {
            ambiguous.push(SceneRef::from(n));
        } else {
            out.insert(key, SceneRef::from(n));
        }
    }
    out
}

/// Pairs scenes of two versions that share owning activity and event path.
pub fn match_scenes(old: &SceneTg, new: &SceneTg) -> SceneMatching {
    let mut m = SceneMatching::default();
    let old_keys = keyed(old, &mut m.ambiguous);
    let new_keys = keyed(new, &mut m.ambiguous);
    for (key, o) in &old_keys {
        match new_keys.get(key) {
            Some(n) => m.pairs.push(ScenePair {
                activity: key.0.clone(),
                path: key.1.clone(),
                old: o.id.clone(),
                new: n.id.clone(),
            }),
            None => m.removed.push(o.clone()),
        }
    }
    m.added = new_keys
        .iter()
        .filter(|(k, _)| !old_keys.contains_key(*k))
        .map(|(_, n)| n.clone())
        .collect();
    m
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneUpdate {
    pub activity: String,
    pub path: PathKey,
    pub old: SceneId,
    pub new: SceneId,
    pub changes: Vec<NodeChange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiffSummary {
    pub scene_updates: usize,
    pub added_scenes: usize,
    pub removed_scenes: usize,
    pub added_pairs: usize,
    pub removed_pairs: usize,
}

impl DiffSummary {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn transition_pair_updates(&self) -> usize {
        self.added_pairs + self.removed_pairs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiffReport {
    pub scene_updates: Vec<SceneUpdate>,
    pub added_scenes: Vec<SceneRef>,
    pub removed_scenes: Vec<SceneRef>,
    pub ambiguous_scenes: Vec<SceneRef>,
    pub added_pairs: Vec<SceneEdge>,
    pub removed_pairs: Vec<SceneEdge>,
    pub summary: DiffSummary,
}

/// Edge identity across versions: bounds move between builds, so widgets
/// are compared by id, or by class when they have none.
type EdgeKey = (SceneId, SceneId, EventKind, String);

fn edge_key(e: &SceneEdge, src: SceneId, dst: SceneId) -> EdgeKey {
    let c = &e.component;
    let label = c
        .resource_id
        .clone()
        .or_else(|| c.widget_class.clone())
        .unwrap_or_default();
    (src, dst, e.event, label)
}

/// Full comparison: scene pairing, node changes inside paired scenes whose
/// pages differ, and transition pairs added or removed.
pub fn diff_graphs(old: &Version, new: &Version) -> DiffReport {
    let matching = match_scenes(&old.scenetg, &new.scenetg);
    let package = &new.scenetg.package;
    let mut scene_updates = Vec::new();
    for p in &matching.pairs {
        let (Some(ot), Some(nt)) = (old.layouts.get(&p.old), new.layouts.get(&p.new)) else {
            if p.old != p.new {
                scene_updates.push(SceneUpdate {
                    activity: p.activity.clone(),
                    path: p.path.clone(),
                    old: p.old.clone(),
                    new: p.new.clone(),
                    changes: Vec::new(),
                });
            }
            continue;
        };
        let changes = diff_trees(ot, nt, package);
        if !changes.is_empty() || p.old != p.new {
            scene_updates.push(SceneUpdate {
                activity: p.activity.clone(),
                path: p.path.clone(),
                old: p.old.clone(),
                new: p.new.clone(),
                changes,
            });
        }
    }

    let to_new: HashMap<&SceneId, &SceneId> = matching.pairs.iter().map(|p| (&p.old, &p.new)).collect();
    let map = |id: &SceneId| to_new.get(id).map(|&n| n.clone()).unwrap_or_else(|| id.clone());
    let mut old_keys: BTreeMap<EdgeKey, &SceneEdge> = BTreeMap::new();
    for e in old.scenetg.edges() {
        old_keys.entry(edge_key(e, map(&e.src), map(&e.dst))).or_insert(e);
    }
    let mut new_keys: BTreeMap<EdgeKey, &SceneEdge> = BTreeMap::new();
    for e in new.scenetg.edges() {
        new_keys.entry(edge_key(e, e.src.clone(), e.dst.clone())).or_insert(e);
    }
    let added_pairs: Vec<SceneEdge> = new_keys
        .iter()
        .filter(|(k, _)| !old_keys.contains_key(*k))
        .map(|(_, e)| (*e).clone())
        .collect();
    let removed_pairs: Vec<SceneEdge> = old_keys
        .iter()
        .filter(|(k, _)| !new_keys.contains_key(*k))
        .map(|(_, e)| (*e).clone())
        .collect();

    let summary = DiffSummary {
        scene_updates: scene_updates.len(),
        added_scenes: matching.added.len(),
        removed_scenes: matching.removed.len(),
        added_pairs: added_pairs.len(),
        removed_pairs: removed_pairs.len(),
    };
    DiffReport {
        scene_updates,
        added_scenes: matching.added,
        removed_scenes: matching.removed,
        ambiguous_scenes: matching.ambiguous,
        added_pairs,
        removed_pairs,
        summary,
    }
}

fn path_label(activity: &str, path: &PathKey) -> String {
    let steps: Vec<String> = path.iter().map(|s| format!("{}:{}", s.event, s.resource_id)).collect();
    if steps.is_empty() {
        activity.to_string()
    } else {
        format!("{activity} {}", steps.join(" "))
    }
}

fn node_label(c: &NodeChange) -> String {
    if c.resource_id.is_empty() {
        crate::layout::simple_name(&c.widget_class).to_string()
    } else {
        c.resource_id.clone()
    }
}

/// Human-readable rendering of a report.
pub fn summary_text(report: &DiffReport) -> String {
    let mut out = String::new();
    for s in &report.added_scenes {
        let _ = writeln!(out, "+scene {} ({})", s.id.short(), path_label(&s.activity, &s.path));
    }
    for s in &report.removed_scenes {
        let _ = writeln!(out, "-scene {} ({})", s.id.short(), path_label(&s.activity, &s.path));
    }
    for u in &report.scene_updates {
        let parts: Vec<String> = u
            .changes
            .iter()
            .map(|c| match (&c.kind, &c.detail) {
                (ChangeKind::Added, _) => format!("+node({})", node_label(c)),
                (ChangeKind::Deleted, _) => format!("-node({})", node_label(c)),
                (ChangeKind::PropertyChanged, Some(d)) => {
                    format!("~node({}).{}: {:?} -> {:?}", node_label(c), d.attribute, d.old, d.new)
                }
                (ChangeKind::PropertyChanged, None) => format!("~node({})", node_label(c)),
            })
            .collect();
        let _ = writeln!(out, "~scene({}): {}", path_label(&u.activity, &u.path), parts.join(" "));
    }
    for (sign, edges) in [('+', &report.added_pairs), ('-', &report.removed_pairs)] {
        for e in edges {
            let _ = writeln!(out, "{sign}pair {} -> {} {}/{}", e.src.short(), e.dst.short(), e.event, e.component);
        }
    }
    let s = &report.summary;
    let _ = writeln!(
        out,
        "{} scene updates, {} added scenes, {} removed scenes, {} added pairs, {} removed pairs",
        s.scene_updates, s.added_scenes, s.removed_scenes, s.added_pairs, s.removed_pairs
    );
    out
}

/// Whether any change touches an attribute that feeds the scene id.
pub fn has_signature_change(changes: &[NodeChange]) -> bool {
    let sig: HashSet<&str> = SIGNATURE_ATTRIBUTES.into_iter().collect();
    changes.iter().any(|c| match (&c.kind, &c.detail) {
        (ChangeKind::PropertyChanged, Some(d)) => sig.contains(d.attribute.as_str()),
        _ => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::to_hierarchy_xml;
    use crate::scene::scene_id;

    fn node(class: &str, id: &str, children: Vec<ComponentNode>) -> ComponentNode {
        let mut n = ComponentNode {
            widget_class: class.into(),
            resource_id: id.into(),
            package: "com.v2ray.ang".into(),
            enabled: true,
            children,
            ..Default::default()
        };
        n.reindex();
        n
    }

    fn tree(root: ComponentNode) -> ComponentTree {
        ComponentTree {
            raw: to_hierarchy_xml(&root),
            root,
            source_activity: "A".into(),
        }
    }

    fn drawer(extra: bool) -> ComponentTree {
        let mut items = vec![
            node("android.widget.TextView", "com.v2ray.ang:id/sub_setting", vec![]),
            node("android.widget.TextView", "com.v2ray.ang:id/settings", vec![]),
        ];
        if extra {
            items.insert(1, node("android.widget.TextView", "com.v2ray.ang:id/user_asset_setting", vec![]));
        }
        tree(node("android.widget.LinearLayout", "com.v2ray.ang:id/nav_view", items))
    }

    #[test]
    fn identical_trees_have_no_changes() {
        assert!(diff_trees(&drawer(true), &drawer(true), "com.v2ray.ang").is_empty());
    }

    #[test]
    fn added_drawer_entry() {
        let changes = diff_trees(&drawer(false), &drawer(true), "com.v2ray.ang");
        assert_eq!(changes.len(), 1);
        assert_eq!(changes[0].kind, ChangeKind::Added);
        assert_eq!(changes[0].resource_id, "com.v2ray.ang:id/user_asset_setting");
        assert_eq!(changes[0].path, vec![1]);
        let back = diff_trees(&drawer(true), &drawer(false), "com.v2ray.ang");
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].kind, ChangeKind::Deleted);
    }

    #[test]
    fn text_change_keeps_scene_id() {
        let old = drawer(false);
        let mut new = old.clone();
        new.root.children[0].text = "Subscriptions".into();
        let changes = diff_trees(&old, &new, "com.v2ray.ang");
        assert_eq!(changes.len(), 1);
        let d = changes[0].detail.clone().unwrap();
        assert_eq!((d.attribute.as_str(), d.old.as_str(), d.new.as_str()), ("text", "", "Subscriptions"));
        assert_eq!(scene_id(&old, "com.v2ray.ang"), scene_id(&new, "com.v2ray.ang"));
        assert!(!has_signature_change(&changes));
    }

    #[test]
    fn anonymous_children_align_by_position() {
        let a = tree(node("F", "", vec![node("android.widget.Button", "", vec![]), node("android.widget.TextView", "", vec![])]));
        let b = tree(node("F", "", vec![node("android.widget.ImageButton", "", vec![]), node("android.widget.TextView", "", vec![])]));
        let changes = diff_trees(&a, &b, "com.v2ray.ang");
        assert_eq!(changes.len(), 1);
        assert_eq!(changes[0].detail.as_ref().unwrap().attribute, "class");
        assert!(has_signature_change(&changes));
    }

    #[test]
    fn added_subtree_reported_once() {
        let a = tree(node("F", "", vec![]));
        let b = tree(node("F", "", vec![node("G", "group", vec![node("T", "t1", vec![]), node("T", "t2", vec![])])]));
        let changes = diff_trees(&a, &b, "com.v2ray.ang");
        assert_eq!(changes.len(), 1);
        assert_eq!(changes[0].resource_id, "group");
    }
}
