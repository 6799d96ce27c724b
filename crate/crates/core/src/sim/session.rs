use std::collections::{BTreeMap, HashMap};

use crate::driver::{Driver, DriverError, Dump, EventOutcome, LaunchReason, LaunchResult};
use crate::graph::EventKind;
use crate::icc::{generate_value, ExtraType, IccMessage};
use crate::layout::{match_with_path, to_hierarchy_xml, Bounds, ComponentNode, Selector};

use super::model::{AppModel, Condition, SceneModel, Target, WidgetModel};

const SCREEN: (i32, i32) = (1080, 1920);
const STATUS_BAR_HEIGHT: i32 = 63;
const SYSTEM_UI: &str = "com.android.systemui";
const LAUNCHER: &str = "com.android.launcher3";

type TemplatePath = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
struct WidgetState {
    text: String,
    checked: bool,
}

/// One activity instance on the back stack.
#[derive(Debug, Clone)]
struct Frame {
    activity: usize,
    scenes: Vec<usize>,
    /// Widget values that differ from the template, per (scene, template path).
    state: BTreeMap<(usize, TemplatePath), WidgetState>,
}

impl Frame {
    fn new(activity: usize) -> Self {
        Self {
            activity,
            scenes: vec![0],
            state: BTreeMap::new(),
        }
    }

    fn scene(&self) -> usize {
        *self.scenes.last().expect("frames always hold a scene")
    }
}

/// Deterministic in-memory device running one [`AppModel`].
#[derive(Debug, Clone)]
pub struct SimSession {
    model: AppModel,
    clock: String,
    frames: Vec<Frame>,
    /// Template path of every widget id, per (activity, scene).
    ids: HashMap<(usize, usize), HashMap<String, TemplatePath>>,
    shots: u64,
}

/// Starts a session with no app running.
pub fn simulate(model: &AppModel, seed: u64) -> SimSession {
    SimSession::new(model.clone(), seed)
}

struct Rendered {
    root: ComponentNode,
    /// Rendered child-index path (from the dump root) to template path.
    origins: HashMap<Vec<usize>, TemplatePath>,
}

impl SimSession {
    pub fn new(model: AppModel, seed: u64) -> Self {
        let mut ids = HashMap::new();
        for (ai, act) in model.activities.iter().enumerate() {
            for (si, scene) in act.scenes.iter().enumerate() {
                let mut map = HashMap::new();
                index_ids(&scene.layout, &mut Vec::new(), &mut map);
                ids.insert((ai, si), map);
            }
        }
        Self {
            model,
            clock: generate_value(ExtraType::Time, seed),
            frames: Vec::new(),
            ids,
            shots: 0,
        }
    }

    pub fn model(&self) -> &AppModel {
        &self.model
    }

    pub fn current_activity(&self) -> Option<&str> {
        self.frames
            .last()
            .map(|f| self.model.activities[f.activity].name.as_str())
    }

    /// Name of the scene model in front, for diagnostics and screenshots.
    pub fn current_scene_name(&self) -> Option<&str> {
        self.frames.last().map(|f| self.scene_model(f).name.as_str())
    }

    /// Number of scenes on the back stack, across activities.
    pub fn stack_depth(&self) -> usize {
        self.frames.iter().map(|f| f.scenes.len()).sum()
    }

    fn scene_model(&self, f: &Frame) -> &SceneModel {
        &self.model.activities[f.activity].scenes[f.scene()]
    }

    fn widget_state(&self, f: &Frame, path: &[usize], w: &WidgetModel) -> WidgetState {
        f.state
            .get(&(f.scene(), path.to_vec()))
            .cloned()
            .unwrap_or_else(|| WidgetState {
                text: w.text.clone(),
                checked: w.checked,
            })
    }

    fn holds(&self, f: &Frame, c: &Condition) -> bool {
        let scene = self.scene_model(f);
        let Some(path) = self.ids[&(f.activity, f.scene())].get(&c.widget) else {
            return false;
        };
        let w = widget_at(&scene.layout, path);
        let st = self.widget_state(f, path, w);
        if let Some(checked) = c.checked {
            return st.checked == checked;
        }
        if let Some(filled) = c.filled {
            return !st.text.is_empty() == filled;
        }
        if let Some(ty) = c.valid {
            return !st.text.is_empty() && ty.accepts(&st.text);
        }
        false
    }

    fn render(&self) -> Rendered {
        let mut origins = HashMap::new();
        let Some(frame) = self.frames.last() else {
            let mut home = plain_node("android.widget.FrameLayout", LAUNCHER);
            home.bounds = Bounds::new(0, 0, SCREEN.0, SCREEN.1).unwrap();
            let mut grid = plain_node("android.view.View", LAUNCHER);
            grid.resource_id = format!("{LAUNCHER}:id/workspace");
            grid.bounds = home.bounds;
            home.children.push(grid);
            home.reindex();
            return Rendered { root: home, origins };
        };
        let scene = self.scene_model(frame);
        let pkg = &self.model.package;
        let mut root = plain_node("android.widget.FrameLayout", pkg);
        root.bounds = Bounds::new(0, 0, SCREEN.0, SCREEN.1).unwrap();
        let mut bar = plain_node("android.widget.FrameLayout", SYSTEM_UI);
        bar.resource_id = format!("{SYSTEM_UI}:id/status_bar");
        bar.bounds = Bounds::new(0, 0, SCREEN.0, STATUS_BAR_HEIGHT).unwrap();
        let mut clock = plain_node("android.widget.TextView", SYSTEM_UI);
        clock.resource_id = format!("{SYSTEM_UI}:id/clock");
        clock.text = self.clock.clone();
        clock.bounds = bar.bounds;
        bar.children.push(clock);
        root.children.push(bar);
        let content_bounds =
            Bounds::new(0, STATUS_BAR_HEIGHT, SCREEN.0, SCREEN.1).unwrap();
        let mut tpath = Vec::new();
        let mut rpath = vec![1];
        if let Some(content) = self.render_widget(
            frame,
            &scene.layout,
            content_bounds,
            &mut tpath,
            &mut rpath,
            &mut origins,
        ) {
            root.children.push(content);
        }
        root.reindex();
        Rendered { root, origins }
    }

    fn render_widget(
        &self,
        frame: &Frame,
        w: &WidgetModel,
        bounds: Bounds,
        tpath: &mut Vec<usize>,
        rpath: &mut Vec<usize>,
        origins: &mut HashMap<Vec<usize>, TemplatePath>,
    ) -> Option<ComponentNode> {
        if !w.visible_when.iter().all(|c| self.holds(frame, c)) {
            return None;
        }
        let state = self.widget_state(frame, tpath, w);
        let visible: Vec<usize> = w
            .children
            .iter()
            .enumerate()
            .filter(|(_, c)| c.visible_when.iter().all(|cond| self.holds(frame, cond)))
            .map(|(i, _)| i)
            .collect();
        let slots = split_vertical(bounds, visible.len());
        let mut children = Vec::with_capacity(visible.len());
        for (slot, &ci) in visible.iter().enumerate() {
            tpath.push(ci);
            rpath.push(slot);
            if let Some(child) =
                self.render_widget(frame, &w.children[ci], slots[slot], tpath, rpath, origins)
            {
                children.push(child);
            }
            rpath.pop();
            tpath.pop();
        }
        origins.insert(rpath.clone(), tpath.clone());
        let mut node = ComponentNode {
            widget_class: w.widget_class.clone(),
            resource_id: w.id.clone(),
            package: w.package.clone().unwrap_or_else(|| self.model.package.clone()),
            text: state.text,
            bounds,
            clickable: w.clickable,
            checkable: w.checkable,
            checked: state.checked,
            enabled: w.enabled,
            scrollable: w.scrollable,
            long_clickable: w.long_clickable,
            input_type: w.input_type.clone(),
            index: 0,
            children,
        };
        node.reindex();
        Some(node)
    }

    fn dump_xml(&self) -> String {
        to_hierarchy_xml(&self.render().root)
    }

    /// Resolves a selector on the current page to a template widget.
    fn locate(&self, selector: &Selector) -> Option<(TemplatePath, &WidgetModel)> {
        let frame = self.frames.last()?;
        let rendered = self.render();
        let (rpath, _) = match_with_path(&rendered.root, selector)?;
        let tpath = rendered.origins.get(&rpath)?.clone();
        let w = widget_at(&self.scene_model(frame).layout, &tpath);
        Some((tpath, w))
    }

    fn fire(&mut self, widget_id: &str, event: EventKind) {
        let Some(frame) = self.frames.last() else {
            return;
        };
        let scene = self.scene_model(frame);
        let target = scene
            .transitions
            .iter()
            .find(|t| {
                t.widget == widget_id
                    && t.event == event
                    && t.guard.iter().all(|c| self.holds(frame, c))
            })
            .map(|t| t.target.clone());
        if let Some(target) = target {
            self.apply(target);
        }
    }

    fn apply(&mut self, target: Target) {
        let Some(frame) = self.frames.last_mut() else {
            return;
        };
        match target {
            Target::Scene(name) => {
                let idx = scene_index(&self.model, frame.activity, &name);
                frame.scenes.push(idx);
            }
            Target::ReplaceScene(name) => {
                let idx = scene_index(&self.model, frame.activity, &name);
                *frame.scenes.last_mut().expect("non-empty") = idx;
            }
            Target::Activity(name) => {
                let idx = self
                    .model
                    .activity_index(&name)
                    .expect("validated activity reference");
                self.frames.push(Frame::new(idx));
            }
            Target::SetText { widget, text } => {
                let key = (frame.activity, frame.scene());
                if let Some(path) = self.ids[&key].get(&widget).cloned() {
                    let scene = &self.model.activities[frame.activity].scenes[frame.scene()];
                    let w = widget_at(&scene.layout, &path);
                    let entry = frame
                        .state
                        .entry((frame.scene(), path))
                        .or_insert_with(|| WidgetState {
                            text: w.text.clone(),
                            checked: w.checked,
                        });
                    entry.text = text;
                }
            }
            Target::Back => self.pop(),
            Target::Exit => self.frames.clear(),
        }
    }

    fn pop(&mut self) {
        if let Some(frame) = self.frames.last_mut() {
            frame.scenes.pop();
            if frame.scenes.is_empty() {
                self.frames.pop();
            }
        }
    }

    fn update_state(&mut self, path: TemplatePath, f: impl FnOnce(&mut WidgetState)) {
        let frame = self.frames.last_mut().expect("caller checked for a frame");
        let scene = &self.model.activities[frame.activity].scenes[frame.scene()];
        let w = widget_at(&scene.layout, &path);
        let entry = frame
            .state
            .entry((frame.scene(), path))
            .or_insert_with(|| WidgetState {
                text: w.text.clone(),
                checked: w.checked,
            });
        f(entry);
    }

    /// Runs an event and classifies the visible effect.
    fn observe(&mut self, event: impl FnOnce(&mut Self) -> bool) -> EventOutcome {
        let before = (self.current_activity().map(str::to_string), self.dump_xml());
        if !event(self) {
            return EventOutcome::NotFound;
        }
        if self.frames.is_empty() {
            return EventOutcome::AppExited;
        }
        let after = (self.current_activity().map(str::to_string), self.dump_xml());
        if before == after {
            EventOutcome::NoUiChange
        } else {
            EventOutcome::UiChanged
        }
    }

    fn check_launch(&self, icc: &IccMessage) -> LaunchResult {
        let Some(act) = self.model.activity(&icc.target_activity) else {
            return LaunchResult::failed(LaunchReason::Undeclared);
        };
        if !act.declared {
            return LaunchResult::failed(LaunchReason::Undeclared);
        }
        if !act.directly_launchable {
            return LaunchResult::failed(LaunchReason::NotExported);
        }
        for req in &act.required_extras {
            match icc.extra(&req.key) {
                None => return LaunchResult::failed(LaunchReason::MissingExtra),
                Some(e) if e.ty != req.ty || !req.ty.accepts(&e.value) => {
                    return LaunchResult::failed(LaunchReason::WrongType)
                }
                Some(_) => {}
            }
        }
        LaunchResult::ok()
    }
}

impl Driver for SimSession {
    fn launch_activity(&mut self, icc: &IccMessage) -> Result<LaunchResult, DriverError> {
        let result = self.check_launch(icc);
        if result.success {
            let idx = self
                .model
                .activity_index(&icc.target_activity)
                .expect("checked above");
            self.frames = vec![Frame::new(idx)];
        }
        Ok(result)
    }

    fn current_dump(&mut self) -> Result<Dump, DriverError> {
        Ok(Dump {
            xml: self.dump_xml(),
            activity: self.current_activity().map(str::to_string),
        })
    }

    fn tap(&mut self, selector: &Selector) -> Result<EventOutcome, DriverError> {
        Ok(self.observe(|s| {
            let Some((path, w)) = s.locate(selector) else {
                return false;
            };
            if !w.enabled {
                return true;
            }
            let (checkable, id) = (w.checkable, w.id.clone());
            if checkable {
                s.update_state(path, |st| st.checked = !st.checked);
            }
            if !id.is_empty() {
                s.fire(&id, EventKind::Tap);
            }
            true
        }))
    }

    fn set_text(&mut self, selector: &Selector, value: &str) -> Result<EventOutcome, DriverError> {
        Ok(self.observe(|s| {
            let Some((path, w)) = s.locate(selector) else {
                return false;
            };
            if !w.enabled || !w.is_editable() {
                return true;
            }
            let id = w.id.clone();
            s.update_state(path, |st| st.text = value.to_string());
            if !id.is_empty() {
                s.fire(&id, EventKind::SetText);
            }
            true
        }))
    }

    fn toggle(&mut self, selector: &Selector) -> Result<EventOutcome, DriverError> {
        Ok(self.observe(|s| {
            let Some((path, w)) = s.locate(selector) else {
                return false;
            };
            if !w.enabled || !w.checkable {
                return true;
            }
            let id = w.id.clone();
            s.update_state(path, |st| st.checked = !st.checked);
            if !id.is_empty() {
                s.fire(&id, EventKind::Toggle);
            }
            true
        }))
    }

    fn press_back(&mut self) -> Result<EventOutcome, DriverError> {
        Ok(self.observe(|s| {
            if s.frames.is_empty() {
                return false;
            }
            s.pop();
            true
        }))
    }

    fn screenshot_ref(&mut self) -> Result<String, DriverError> {
        self.shots += 1;
        let (act, scene) = match self.frames.last() {
            Some(f) => (
                self.model.activities[f.activity].name.clone(),
                self.scene_model(f).name.clone(),
            ),
            None => ("none".to_string(), "none".to_string()),
        };
        Ok(format!("sim://{act}/{scene}/{}", self.shots))
    }
}

fn plain_node(class: &str, package: &str) -> ComponentNode {
    ComponentNode {
        widget_class: class.to_string(),
        package: package.to_string(),
        enabled: true,
        ..ComponentNode::default()
    }
}

fn index_ids(w: &WidgetModel, path: &mut Vec<usize>, out: &mut HashMap<String, TemplatePath>) {
    if !w.id.is_empty() {
        out.insert(w.id.clone(), path.clone());
    }
    for (i, c) in w.children.iter().enumerate() {
        path.push(i);
        index_ids(c, path, out);
        path.pop();
    }
}

fn widget_at<'a>(root: &'a WidgetModel, path: &[usize]) -> &'a WidgetModel {
    path.iter().fold(root, |w, &i| &w.children[i])
}

fn scene_index(model: &AppModel, activity: usize, name: &str) -> usize {
    model.activities[activity]
        .scenes
        .iter()
        .position(|s| s.name == name)
        .expect("validated scene reference")
}

fn split_vertical(b: Bounds, n: usize) -> Vec<Bounds> {
    if n == 0 {
        return Vec::new();
    }
    let height = b.bottom - b.top;
    (0..n)
        .map(|i| {
            let top = b.top + height * i as i32 / n as i32;
            let bottom = b.top + height * (i as i32 + 1) / n as i32;
            Bounds::new(b.left, top, b.right, bottom).expect("monotone split")
        })
        .collect()
}
