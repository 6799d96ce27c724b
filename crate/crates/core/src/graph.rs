//! Activity transition graph (ATG) and scene transition graph (SceneTG).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::Selector;
use crate::scene::SceneId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    #[default]
    Tap,
    SetText,
    Toggle,
    Back,
    Launch,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Tap => "TAP",
            EventKind::SetText => "SET_TEXT",
            EventKind::Toggle => "TOGGLE",
            EventKind::Back => "BACK",
            EventKind::Launch => "LAUNCH",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where an ATG edge came from. A seed edge keeps its origin when the same
/// transition is later observed at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeOrigin {
    Seed,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEdge {
    pub caller: String,
    pub callee: String,
    pub event: EventKind,
    pub component: Selector,
    pub origin: EdgeOrigin,
}

type ActivityKey = (String, String, EventKind, Selector);

impl ActivityEdge {
    /// Identity of the edge. A component with a resource id is keyed on the
    /// id alone, so a statically known trigger and the same widget seen at
    /// run time (which also carries its class) are one edge.
    fn key(&self) -> ActivityKey {
        let component = match &self.component.resource_id {
            Some(id) => Selector::by_id(id.clone()),
            None => self.component.clone(),
        };
        (self.caller.clone(), self.callee.clone(), self.event, component)
    }
}

/// One step of the event path that leads from an activity's launch to a scene.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathStep {
    pub event: EventKind,
    pub resource_id: String,
}

/// Event path from the launch of the owning activity; empty for entry scenes.
pub type PathKey = Vec<PathStep>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneNode {
    pub id: SceneId,
    pub owning_activity: String,
    pub layout_ref: String,
    pub screenshot_ref: String,
    pub discovered_at: u64,
    pub path: PathKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SceneEdge {
    pub src: SceneId,
    pub dst: SceneId,
    pub event: EventKind,
    pub component: Selector,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no recorded transition from {caller} to {callee}")]
    MissingEdge { caller: String, callee: String },
    #[error("scene {0} is not in the graph")]
    UnknownScene(SceneId),
    #[error("duplicate scene {0} in export")]
    DuplicateScene(SceneId),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed graph export: {0}")]
    Json(#[from] serde_json::Error),
}

/// Opaque position in the ATG insert history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtgMark(u64);

#[derive(Debug, Clone, Default)]
pub struct Atg {
    edges: Vec<ActivityEdge>,
    keys: HashSet<ActivityKey>,
    inserts: u64,
}

impl Atg {
    pub fn new() -> Self {
        Self::default()
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[ActivityEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Returns `true` iff the edge was not present. A duplicate leaves the
    /// stored edge, including its origin, untouched.
    pub fn add_activity_edge(&mut self, edge: ActivityEdge) -> bool {
        if !self.keys.insert(edge.key()) {
            return false;
        }
        self.edges.push(edge);
        self.inserts += 1;
        true
    }

    pub fn mark(&self) -> AtgMark {
        AtgMark(self.inserts)
    }

    pub fn augmented_since(&self, mark: AtgMark) -> bool {
        self.inserts > mark.0
    }

    /// All recorded triggers for `caller -> callee`, earliest first.
    pub fn edge_actions(&self, caller: &str, callee: &str) -> Vec<(EventKind, Selector)> {
        self.edges
            .iter()
            .filter(|e| e.caller == caller && e.callee == callee)
            .map(|e| (e.event, e.component.clone()))
            .collect()
    }

    pub fn edge_action(&self, caller: &str, callee: &str) -> Result<(EventKind, Selector), GraphError> {
        self.edge_actions(caller, callee)
            .into_iter()
            .next()
            .ok_or_else(|| GraphError::MissingEdge {
                caller: caller.to_string(),
                callee: callee.to_string(),
            })
    }

    /// Caller chains ending at `target`, each starting at an activity
    /// accepted by `launchable`. The search is a reverse breadth-first walk
    /// with callers visited in name order, so every reached activity yields at
    /// most one chain and none revisits an activity. Chains come back sorted
    /// by length, then by activity names.
    pub fn caller_chains(&self, target: &str, launchable: impl Fn(&str) -> bool) -> Vec<Vec<String>> {
        let mut callers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for e in &self.edges {
            if e.caller != e.callee {
                callers.entry(e.callee.as_str()).or_default().insert(e.caller.as_str());
            }
        }
        if !callers.contains_key(target) {
            return Vec::new();
        }
        let mut parent: HashMap<&str, &str> = HashMap::new();
        let mut visited: HashSet<&str> = HashSet::from([target]);
        let mut queue = VecDeque::from([target]);
        let mut chains = Vec::new();
        while let Some(act) = queue.pop_front() {
            for &caller in callers.get(act).into_iter().flatten() {
                if !visited.insert(caller) {
                    continue;
                }
                parent.insert(caller, act);
                queue.push_back(caller);
                if launchable(caller) {
                    let mut chain = vec![caller.to_string()];
                    let mut cur = caller;
                    while let Some(&next) = parent.get(cur) {
                        chain.push(next.to_string());
                        cur = next;
                    }
                    chains.push(chain);
                }
            }
        }
        chains.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        chains
    }
}

#[derive(Debug, Clone, Default)]
pub struct SceneTg {
    pub package: String,
    /// Logical timestamp of the export, supplied by the producer.
    pub generated_at: u64,
    nodes: Vec<SceneNode>,
    index: HashMap<SceneId, usize>,
    edges: Vec<SceneEdge>,
    edge_set: HashSet<SceneEdge>,
}

impl SceneTg {
    pub fn new(package: impl Into<String>) -> Self {
        Self {
            package: package.into(),
            ..Self::default()
        }
    }

    pub fn nodes(&self) -> &[SceneNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[SceneEdge] {
        &self.edges
    }

    pub fn contains(&self, id: &SceneId) -> bool {
        self.index.contains_key(id)
    }

    pub fn node(&self, id: &SceneId) -> Option<&SceneNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    /// Adds a scene unless its id is already known; the first discovery keeps
    /// ownership. Returns `true` iff added.
    pub fn add_scene(&mut self, node: SceneNode) -> bool {
        if self.index.contains_key(&node.id) {
            return false;
        }
        self.index.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        true
    }

    /// Returns `true` iff the edge is new. Both endpoints must be present.
    pub fn add_edge(&mut self, edge: SceneEdge) -> Result<bool, GraphError> {
        for id in [&edge.src, &edge.dst] {
            if !self.contains(id) {
                return Err(GraphError::UnknownScene(id.clone()));
            }
        }
        if !self.edge_set.insert(edge.clone()) {
            return Ok(false);
        }
        self.edges.push(edge);
        Ok(true)
    }

    fn sorted_nodes(&self) -> Vec<&SceneNode> {
        let mut nodes: Vec<&SceneNode> = self.nodes.iter().collect();
        nodes.sort_by(|a, b| (a.discovered_at, &a.id).cmp(&(b.discovered_at, &b.id)));
        nodes
    }

    /// Edges ordered by their source's discovery, then destination's, then
    /// label.
    fn sorted_edges(&self) -> Vec<&SceneEdge> {
        let rank = |id: &SceneId| self.node(id).map(|n| n.discovered_at).unwrap_or(u64::MAX);
        let mut edges: Vec<&SceneEdge> = self.edges.iter().collect();
        edges.sort_by(|a, b| {
            (rank(&a.src), &a.src, rank(&a.dst), &a.dst, a.event, &a.component).cmp(&(
                rank(&b.src),
                &b.src,
                rank(&b.dst),
                &b.dst,
                b.event,
                &b.component,
            ))
        });
        edges
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stats {
    pub explored_activities: usize,
    pub scenes: usize,
    pub transition_pairs: usize,
    pub atg_edges: usize,
}

pub fn stats(tg: &SceneTg, atg: &Atg) -> Stats {
    let activities: HashSet<&str> = tg.nodes.iter().map(|n| n.owning_activity.as_str()).collect();
    Stats {
        explored_activities: activities.len(),
        scenes: tg.nodes.len(),
        transition_pairs: tg.edges.len(),
        atg_edges: atg.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(Self::Dot),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown export format `{other}` (expected dot or json)")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SceneEntry {
    id: SceneId,
    activity: String,
    layout_ref: String,
    screenshot_ref: String,
    #[serde(default)]
    discovered_at: u64,
    #[serde(default)]
    path: PathKey,
}

#[derive(Serialize, Deserialize)]
struct Document {
    package: String,
    generated_at: u64,
    scenes: Vec<SceneEntry>,
    scene_edges: Vec<SceneEdge>,
    atg_edges: Vec<ActivityEdge>,
    stats: Stats,
}

pub fn to_json(tg: &SceneTg, atg: &Atg) -> String {
    let doc = Document {
        package: tg.package.clone(),
        generated_at: tg.generated_at,
        scenes: tg
            .sorted_nodes()
            .into_iter()
            .map(|n| SceneEntry {
                id: n.id.clone(),
                activity: n.owning_activity.clone(),
                layout_ref: n.layout_ref.clone(),
                screenshot_ref: n.screenshot_ref.clone(),
                discovered_at: n.discovered_at,
                path: n.path.clone(),
            })
            .collect(),
        scene_edges: tg.sorted_edges().into_iter().cloned().collect(),
        atg_edges: atg.edges.clone(),
        stats: stats(tg, atg),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("graph documents always serialize");
    out.push('\n');
    out
}

/// Reads a JSON export back into graphs.
pub fn from_json(text: &str) -> Result<(SceneTg, Atg), GraphError> {
    let doc: Document = serde_json::from_str(text)?;
    let mut tg = SceneTg::new(doc.package);
    tg.generated_at = doc.generated_at;
    for s in doc.scenes {
        let id = s.id.clone();
        let added = tg.add_scene(SceneNode {
            id: s.id,
            owning_activity: s.activity,
            layout_ref: s.layout_ref,
            screenshot_ref: s.screenshot_ref,
            discovered_at: s.discovered_at,
            path: s.path,
        });
        if !added {
            return Err(GraphError::DuplicateScene(id));
        }
    }
    for e in doc.scene_edges {
        tg.add_edge(e)?;
    }
    let mut atg = Atg::new();
    for e in doc.atg_edges {
        atg.add_activity_edge(e);
    }
    Ok((tg, atg))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_dot(tg: &SceneTg) -> String {
    let mut out = String::from("digraph scenetg {\n  node [shape=box];\n");
    for n in tg.sorted_nodes() {
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{}\\n{}\"];",
            n.id,
            n.id.short(),
            dot_escape(&n.owning_activity)
        );
    }
    for e in tg.sorted_edges() {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}/{}\"];",
            e.src,
            e.dst,
            e.event,
            dot_escape(&e.component.to_string())
        );
    }
    out.push_str("}\n");
    out
}

pub fn render(tg: &SceneTg, atg: &Atg, format: ExportFormat) -> String {
    match format {
        ExportFormat::Dot => to_dot(tg),
        ExportFormat::Json => to_json(tg, atg),
    }
}

pub fn export(tg: &SceneTg, atg: &Atg, format: ExportFormat, path: &Path) -> Result<(), GraphError> {
    std::fs::write(path, render(tg, atg, format)).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}
