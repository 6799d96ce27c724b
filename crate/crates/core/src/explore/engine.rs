//! The exploration loop: launch each activity directly or through a caller
//! chain, fuzz its initial state, and walk its scenes depth first.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::driver::{Driver, DriverError, EventOutcome, LaunchReason, LaunchResult};
use crate::graph::{ActivityEdge, Atg, EdgeOrigin, EventKind, PathKey, SceneEdge, SceneNode, SceneTg, stats};
use crate::icc::{build_icc, direct_launch, IccMessage};
use crate::layout::{find_clickable, parse_hierarchy_dump, ComponentTree, Selector};
use crate::scene::{raw_state_id, scene_id, SceneId};
use crate::sim::AppInput;

use super::config::ExplorationConfig;
use super::fuzz::{fuzz_assignments, non_transitive_kind, plan_assignment, FuzzAssignment, UiAction};
use super::report::{ActivityOutcome, ActivityReport, ExplorationReport, StopReason};
use super::trace::TraceRecord;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub scenetg: SceneTg,
    pub atg: Atg,
    pub report: ExplorationReport,
    pub trace: Vec<TraceRecord>,
    /// Hierarchy dump recorded for each scene.
    pub layouts: BTreeMap<SceneId, String>,
}

/// How to bring an activity to the front again.
#[derive(Debug, Clone)]
pub enum Route {
    Direct(IccMessage),
    /// Launch `head`, then run each hop's actions from the entry of the
    /// activity it starts in.
    Chain { head: IccMessage, hops: Vec<Vec<UiAction>> },
}

enum Halt {
    /// Timeout or step budget; unwind everything.
    Stop,
    Driver(DriverError),
}

type Step<T> = Result<T, Halt>;

struct Obs {
    activity: Option<String>,
    tree: ComponentTree,
    id: SceneId,
}

/// Context of one depth-first walk.
struct Visit<'r> {
    activity: String,
    route: &'r Route,
    state: usize,
}

type TriggerKey = (String, String, EventKind, Selector);

/// One exploration session over a driver. [`explore`] runs it to the end;
/// the individual steps are public for callers that drive it by hand.
pub struct Explorer<'d, D: Driver + ?Sized> {
    activities: Vec<String>,
    driver: &'d mut D,
    cfg: ExplorationConfig,
    package: String,
    tg: SceneTg,
    atg: Atg,
    trace: Vec<TraceRecord>,
    layouts: BTreeMap<SceneId, String>,
    steps: u64,
    started: Instant,
    stop: Option<StopReason>,
    icc: BTreeMap<String, Result<IccMessage, String>>,
    direct_failed: HashSet<String>,
    /// Actions from the caller's entry to the scene holding each dynamic
    /// trigger, so indirect launches can replay them.
    trigger_paths: HashMap<TriggerKey, Vec<UiAction>>,
}

/// Runs the whole exploration of `app` on `driver`.
pub fn explore<D: Driver + ?Sized>(
    app: &AppInput,
    driver: &mut D,
    config: &ExplorationConfig,
) -> Result<Exploration, ExploreError> {
    Ok(Explorer::new(app, driver, config)?.run())
}

impl<'d, D: Driver + ?Sized> Explorer<'d, D> {
    /// Seeds the ATG and builds one launch message per activity.
    pub fn new(app: &AppInput, driver: &'d mut D, config: &ExplorationConfig) -> Result<Self, ExploreError> {
        config.validate().map_err(ExploreError::Config)?;
        let mut ex = Explorer {
            activities: app.activities.iter().map(|a| a.target_activity.clone()).collect(),
            driver,
            cfg: config.clone(),
            package: app.package.clone(),
            tg: SceneTg::new(&app.package),
            atg: Atg::new(),
            trace: Vec::new(),
            layouts: BTreeMap::new(),
            steps: 0,
            started: Instant::now(),
            stop: None,
            icc: BTreeMap::new(),
            direct_failed: HashSet::new(),
            trigger_paths: HashMap::new(),
        };
        for e in &app.seed_atg {
            ex.atg.add_activity_edge(e.clone());
        }
        for spec in &app.activities {
            let msg = build_icc(spec, ex.cfg.rng_seed).map_err(|e| e.to_string());
            ex.icc.insert(spec.target_activity.clone(), msg);
        }
        if ex.started.elapsed() > Duration::from_secs_f64(ex.cfg.analysis_timeout) {
            ex.stop = Some(StopReason::Timeout);
        }
        Ok(ex)
    }

    pub fn scenetg(&self) -> &SceneTg {
        &self.tg
    }

    pub fn atg(&self) -> &Atg {
        &self.atg
    }

    /// Launches `activity` directly and walks it once from its default
    /// state, without fuzzing. Returns the scenes expanded by the walk.
    pub fn exhaustive_explore(&mut self, activity: &str) -> Result<BTreeSet<SceneId>, DriverError> {
        let Some(Ok(icc)) = self.icc.get(activity).cloned() else {
            return Err(DriverError::Failure(format!("no launch message for {activity}")));
        };
        let route = Route::Direct(icc);
        let mut expanded = HashSet::new();
        let walk = (|| -> Step<()> {
            if !self.enter(&route, activity)? {
                return Err(Halt::Driver(DriverError::Failure(format!("cannot launch {activity}"))));
            }
            let start = self.observe()?;
            self.record_scene(&start, Vec::new())?;
            let visit = Visit {
                activity: activity.to_string(),
                route: &route,
                state: 0,
            };
            self.exhaustive(&visit, &[], start, 0, &mut expanded)
        })();
        match walk {
            Ok(()) | Err(Halt::Stop) => Ok(expanded.into_iter().collect()),
            Err(Halt::Driver(e)) => Err(e),
        }
    }

    /// Reaches `target` through a caller chain; on success the target is in
    /// front and the chain is returned.
    pub fn indirect_launch(&mut self, target: &str) -> Result<Option<Vec<String>>, DriverError> {
        match self.indirect(target) {
            Ok(found) => Ok(found.map(|(chain, _)| chain)),
            Err(Halt::Stop) => Ok(None),
            Err(Halt::Driver(e)) => Err(e),
        }
    }

    /// Explores the queue round by round until the stop rule fires.
    pub fn run(mut self) -> Exploration {
        let mut reports: Vec<ActivityReport> = self
            .activities
            .iter()
            .map(|name| ActivityReport {
                name: name.clone(),
                outcome: ActivityOutcome::Failed,
                attempts: 0,
                launch_reason: None,
                error: None,
            })
            .collect();
        let mut queue: Vec<usize> = (0..reports.len()).collect();
        let mut rounds = 0;
        let stop_reason = loop {
            if let Some(reason) = self.stop {
                break reason;
            }
            rounds += 1;
            let mark = self.atg.mark();
            let mut failed = Vec::new();
            for &i in &queue {
                if self.stop.is_some() || !self.attempt(&mut reports[i]) {
                    failed.push(i);
                }
            }
            queue = failed;
            if let Some(reason) = self.stop {
                break reason;
            }
            if queue.is_empty() {
                break StopReason::QueueEmpty;
            }
            if !self.cfg.enable_indirect {
                break StopReason::IndirectDisabled;
            }
            if !self.atg.augmented_since(mark) {
                break StopReason::AtgNotAugmented;
            }
        };

        self.tg.generated_at = self.steps;
        let report = ExplorationReport {
            package: self.package.clone(),
            seed: self.cfg.rng_seed,
            config: self.cfg.clone(),
            activities: reports,
            rounds,
            stop_reason,
            partial: matches!(stop_reason, StopReason::Timeout | StopReason::Budget),
            steps: self.steps,
            wall_time_ms: self.started.elapsed().as_millis() as u64,
            stats: stats(&self.tg, &self.atg),
        };
        Exploration {
            scenetg: self.tg,
            atg: self.atg,
            report,
            trace: self.trace,
            layouts: self.layouts,
        }
    }

    /// One queue entry: launch, then explore. Returns `true` when the
    /// activity does not need to be queued again.
    fn attempt(&mut self, rep: &mut ActivityReport) -> bool {
        rep.attempts += 1;
        let name = rep.name.clone();
        let mut route = None;
        match self.icc.get(&name).cloned() {
            Some(Ok(icc)) => match self.launch(&icc, &name) {
                Ok(r) if r.success => {
                    route = Some((Route::Direct(icc), ActivityOutcome::Direct));
                }
                Ok(r) => {
                    rep.launch_reason = Some(r.reason);
                    self.direct_failed.insert(name.clone());
                }
                Err(Halt::Stop) => return false,
                Err(Halt::Driver(e)) => {
                    rep.error = Some(e.to_string());
                    self.direct_failed.insert(name.clone());
                }
            },
            Some(Err(e)) => {
                rep.error = Some(e);
                self.direct_failed.insert(name.clone());
            }
            None => {}
        }
        if route.is_none() && self.cfg.enable_indirect {
            match self.indirect(&name) {
                Ok(Some((chain, r))) => route = Some((r, ActivityOutcome::Indirect { chain })),
                Ok(None) => {}
                Err(Halt::Stop) => return false,
                Err(Halt::Driver(e)) => rep.error = Some(e.to_string()),
            }
        }
        let Some((route, outcome)) = route else {
            return false;
        };
        rep.outcome = outcome;
        rep.error = None;
        match self.explore_activity(&name, &route) {
            Ok(()) | Err(Halt::Stop) => {}
            Err(Halt::Driver(e)) => rep.error = Some(e.to_string()),
        }
        true
    }

    // ----- driver plumbing -----

    fn tick(&mut self) -> Step<()> {
        if self.stop.is_some() {
            return Err(Halt::Stop);
        }
        if self.cfg.step_budget.is_some_and(|b| self.steps >= b) {
            self.stop = Some(StopReason::Budget);
            return Err(Halt::Stop);
        }
        if self.started.elapsed() > Duration::from_secs_f64(self.cfg.dynamic_timeout) {
            self.stop = Some(StopReason::Timeout);
            return Err(Halt::Stop);
        }
        self.steps += 1;
        Ok(())
    }

    fn log(&mut self, activity: Option<&str>, scene: Option<&SceneId>, action: &str, selector: Option<&Selector>, outcome: String) {
        self.trace.push(TraceRecord {
            step: self.steps,
            activity: activity.map(str::to_string),
            scene_id: scene.map(|s| s.to_string()),
            action: action.to_string(),
            selector: selector.map(|s| s.to_string()),
            outcome,
        });
    }

    fn launch(&mut self, icc: &IccMessage, name: &str) -> Step<LaunchResult> {
        self.tick()?;
        let r = direct_launch(self.driver, icc).map_err(Halt::Driver)?;
        self.log(Some(name), None, "launch", None, reason_name(r.reason).to_string());
        Ok(r)
    }

    fn act(&mut self, activity: &str, scene: Option<&SceneId>, action: &UiAction) -> Step<EventOutcome> {
        self.tick()?;
        let outcome = action.perform(self.driver).map_err(Halt::Driver)?;
        let name = match action.event {
            EventKind::Tap | EventKind::Launch => "tap",
            EventKind::SetText => "set_text",
            EventKind::Toggle => "toggle",
            EventKind::Back => "back",
        };
        let selector = (action.event != EventKind::Back).then_some(&action.selector);
        self.log(Some(activity), scene, name, selector, outcome_name(outcome));
        Ok(outcome)
    }

    fn back(&mut self, activity: &str, scene: Option<&SceneId>) -> Step<EventOutcome> {
        let action = UiAction {
            event: EventKind::Back,
            selector: Selector::default(),
            text: None,
        };
        self.act(activity, scene, &action)
    }

    fn observe(&mut self) -> Step<Obs> {
        let dump = self.driver.current_dump().map_err(Halt::Driver)?;
        let tree = parse_hierarchy_dump(&dump.xml, dump.activity.as_deref().unwrap_or(""))
            .map_err(|e| Halt::Driver(DriverError::Failure(format!("unreadable dump: {e}"))))?;
        let id = if self.cfg.enable_scene_id {
            scene_id(&tree, &self.package)
        } else {
            raw_state_id(&tree)
        };
        Ok(Obs {
            activity: dump.activity,
            tree,
            id,
        })
    }

    fn record_scene(&mut self, obs: &Obs, path: PathKey) -> Step<bool> {
        let Some(activity) = obs.activity.clone() else {
            return Ok(false);
        };
        if self.tg.contains(&obs.id) {
            return Ok(false);
        }
        let screenshot_ref = self.driver.screenshot_ref().map_err(Halt::Driver)?;
        let node = SceneNode {
            id: obs.id.clone(),
            owning_activity: activity,
            layout_ref: format!("layouts/{}.xml", obs.id),
            screenshot_ref,
            discovered_at: self.tg.nodes().len() as u64,
            path,
        };
        self.layouts.insert(obs.id.clone(), obs.tree.raw.clone());
        Ok(self.tg.add_scene(node))
    }

    fn add_scene_edge(&mut self, src: &SceneId, dst: &SceneId, selector: &Selector) {
        if src == dst {
            return;
        }
        let edge = SceneEdge {
            src: src.clone(),
            dst: dst.clone(),
            event: EventKind::Tap,
            component: selector.clone(),
        };
        if let Err(e) = self.tg.add_edge(edge) {
            log::warn!("dropping scene edge: {e}");
        }
    }

    // ----- launching -----

    /// Brings `activity` to the front along `route`.
    fn enter(&mut self, route: &Route, activity: &str) -> Step<bool> {
        let (head, hops) = match route {
            Route::Direct(icc) => (icc, &[][..]),
            Route::Chain { head, hops } => (head, hops.as_slice()),
        };
        if !self.launch(head, &head.target_activity.clone())?.success {
            return Ok(false);
        }
        for hop in hops {
            let here = self.observe()?.activity.unwrap_or_default();
            for a in hop {
                self.act(&here, None, a)?;
            }
        }
        Ok(self.observe()?.activity.as_deref() == Some(activity))
    }

    /// Tries the ATG's caller chains for `target` in order, replaying the
    /// recorded triggers hop by hop.
    fn indirect(&mut self, target: &str) -> Step<Option<(Vec<String>, Route)>> {
        let launchable: HashSet<String> = self
            .icc
            .iter()
            .filter(|(name, msg)| msg.is_ok() && *name != target && !self.direct_failed.contains(*name))
            .map(|(name, _)| name.clone())
            .collect();
        let chains = self.atg.caller_chains(target, |a| launchable.contains(a));
        for chain in chains {
            let Some(Ok(head)) = self.icc.get(&chain[0]).cloned() else {
                continue;
            };
            let mut hops: Vec<Vec<UiAction>> = Vec::new();
            for pair in chain.windows(2) {
                let (from, to) = (&pair[0], &pair[1]);
                let mut chosen = None;
                for (event, selector) in self.atg.edge_actions(from, to) {
                    let key = (from.clone(), to.clone(), event, selector.clone());
                    let mut actions = self.trigger_paths.get(&key).cloned().unwrap_or_default();
                    actions.push(UiAction {
                        event,
                        selector,
                        text: None,
                    });
                    let route = Route::Chain {
                        head: head.clone(),
                        hops: hops.clone(),
                    };
                    if !self.enter(&route, from)? {
                        break;
                    }
                    for a in &actions {
                        self.act(from, None, a)?;
                    }
                    if self.observe()?.activity.as_deref() == Some(to.as_str()) {
                        chosen = Some(actions);
                        break;
                    }
                }
                match chosen {
                    Some(actions) => hops.push(actions),
                    None => break,
                }
            }
            if hops.len() + 1 == chain.len() {
                self.log(Some(target), None, "launch", None, format!("INDIRECT via {}", chain.join(" > ")));
                return Ok(Some((chain, Route::Chain { head, hops })));
            }
        }
        Ok(None)
    }

    // ----- exploring -----

    /// Fuzzes the entry state and walks the activity once per assignment.
    /// The driver is on the activity's entry scene when this is called.
    fn explore_activity(&mut self, activity: &str, route: &Route) -> Step<()> {
        let entry = self.observe()?;
        if entry.activity.as_deref() != Some(activity) {
            return Err(Halt::Driver(DriverError::Failure(format!(
                "expected {activity} in front, found {:?}",
                entry.activity
            ))));
        }
        self.record_scene(&entry, Vec::new())?;
        let assignments = if self.cfg.enable_fuzzing {
            fuzz_assignments(&entry.tree, &self.package, &self.cfg)
        } else {
            vec![FuzzAssignment::default()]
        };
        for (state, assignment) in assignments.iter().enumerate() {
            if state > 0 && !self.enter(route, activity)? {
                continue;
            }
            let page = self.observe()?;
            let (actions, missing) = plan_assignment(&page.tree, assignment);
            for sel in missing {
                self.log(Some(activity), Some(&page.id), "fuzz", Some(&sel), "not_found".into());
            }
            for a in &actions {
                self.act(activity, Some(&page.id), a)?;
            }
            let start = self.observe()?;
            if start.activity.as_deref() != Some(activity) {
                continue;
            }
            let key = actions.iter().map(UiAction::path_step).collect();
            self.record_scene(&start, key)?;
            let visit = Visit {
                activity: activity.to_string(),
                route,
                state,
            };
            let mut expanded = HashSet::new();
            self.exhaustive(&visit, &actions, start, 0, &mut expanded)?;
        }
        Ok(())
    }

    /// Widgets to tap on a page: clickable, enabled, not fuzz-owned, one per
    /// selector.
    fn tap_targets(&self, tree: &ComponentTree) -> Vec<Selector> {
        let mut seen = HashSet::new();
        find_clickable(tree, &self.package)
            .into_iter()
            .filter(|n| n.enabled && non_transitive_kind(&n.widget_class).is_none())
            .map(Selector::for_node)
            .filter(|s| seen.insert(s.clone()))
            .collect()
    }

    /// Depth-first walk from `cur`, reached by `path` from the activity entry.
    fn exhaustive(
        &mut self,
        visit: &Visit<'_>,
        path: &[UiAction],
        cur: Obs,
        depth: usize,
        expanded: &mut HashSet<SceneId>,
    ) -> Step<()> {
        if !expanded.insert(cur.id.clone()) {
            return Ok(());
        }
        let activity = visit.activity.as_str();
        self.log(Some(activity), Some(&cur.id), "expand", None, format!("state={}", visit.state));
        for selector in self.tap_targets(&cur.tree) {
            if !self.restore(visit, path, &cur.id)? {
                log::warn!("could not return to scene {} of {activity}", cur.id.short());
                return Ok(());
            }
            let tap = UiAction::tap(selector.clone());
            if self.act(activity, Some(&cur.id), &tap)? != EventOutcome::UiChanged {
                continue;
            }
            let next = self.observe()?;
            let Some(now) = next.activity.clone() else {
                continue;
            };
            if now != activity {
                let edge = ActivityEdge {
                    caller: activity.to_string(),
                    callee: now.clone(),
                    event: EventKind::Tap,
                    component: selector.clone(),
                    origin: EdgeOrigin::Dynamic,
                };
                if self.atg.add_activity_edge(edge) {
                    self.trigger_paths
                        .insert((activity.to_string(), now, EventKind::Tap, selector.clone()), path.to_vec());
                }
                self.record_scene(&next, Vec::new())?;
                self.add_scene_edge(&cur.id, &next.id, &selector);
                continue;
            }
            if next.id == cur.id {
                continue;
            }
            let mut child_path = path.to_vec();
            child_path.push(tap);
            self.record_scene(&next, child_path.iter().map(UiAction::path_step).collect())?;
            self.add_scene_edge(&cur.id, &next.id, &selector);
            if depth + 1 < self.cfg.max_depth_per_activity {
                self.exhaustive(visit, &child_path, next, depth + 1, expanded)?;
            }
        }
        Ok(())
    }

    /// Returns to scene `expected`: press back until it shows, otherwise
    /// relaunch and replay `path`.
    fn restore(&mut self, visit: &Visit<'_>, path: &[UiAction], expected: &SceneId) -> Step<bool> {
        let activity = visit.activity.as_str();
        let at = |o: &Obs| o.activity.as_deref() == Some(activity) && o.id == *expected;
        let mut obs = self.observe()?;
        if at(&obs) {
            return Ok(true);
        }
        for _ in 0..=self.cfg.max_depth_per_activity {
            if obs.activity.is_none() {
                break;
            }
            let here = obs.activity.clone().unwrap_or_default();
            if self.back(&here, Some(&obs.id))? == EventOutcome::AppExited {
                break;
            }
            obs = self.observe()?;
            if at(&obs) {
                return Ok(true);
            }
        }
        if !self.enter(visit.route, activity)? {
            return Ok(false);
        }
        for a in path {
            self.act(activity, None, a)?;
        }
        Ok(at(&self.observe()?))
    }
}

fn outcome_name(o: EventOutcome) -> String {
    match o {
        EventOutcome::UiChanged => "ui_changed",
        EventOutcome::NoUiChange => "no_ui_change",
        EventOutcome::NotFound => "not_found",
        EventOutcome::AppExited => "app_exited",
    }
    .to_string()
}

/// Launch reasons as they appear in the trace.
pub fn reason_name(r: LaunchReason) -> &'static str {
    match r {
        LaunchReason::Ok => "OK",
        LaunchReason::NotExported => "NOT_EXPORTED",
        LaunchReason::MissingExtra => "MISSING_EXTRA",
        LaunchReason::WrongType => "WRONG_TYPE",
        LaunchReason::Undeclared => "UNDECLARED",
    }
}
