//! State fuzzing over non-transitive widgets.

use serde::{Deserialize, Serialize};

use crate::driver::{Driver, DriverError, EventOutcome};
use crate::graph::{EventKind, PathStep};
use crate::icc::{derive_seed, generate_value, ExtraType};
use crate::layout::{bfs_nodes, match_component, parse_hierarchy_dump, simple_name, ComponentTree, Selector};

use super::config::ExplorationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NonTransitiveKind {
    EditText,
    Checkbox,
    Switch,
}

/// Classifies a widget class by its simple name.
pub fn non_transitive_kind(widget_class: &str) -> Option<NonTransitiveKind> {
    let simple = simple_name(widget_class);
    if simple.ends_with("EditText") {
        Some(NonTransitiveKind::EditText)
    } else if simple.ends_with("CheckBox") {
        Some(NonTransitiveKind::Checkbox)
    } else if ["Switch", "SwitchCompat", "ToggleButton"]
        .iter()
        .any(|s| simple.ends_with(s))
    {
        Some(NonTransitiveKind::Switch)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzValue {
    Text(String),
    Checked(bool),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzEntry {
    pub selector: Selector,
    pub kind: NonTransitiveKind,
    pub value: FuzzValue,
}

/// Requested states for the targeted widgets of one page. Widgets without an
/// entry keep whatever state the page shows.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FuzzAssignment {
    pub entries: Vec<FuzzEntry>,
}

/// A driver action the explorer can record and replay.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UiAction {
    pub event: EventKind,
    pub selector: Selector,
    pub text: Option<String>,
}

impl UiAction {
    pub fn tap(selector: Selector) -> Self {
        Self {
            event: EventKind::Tap,
            selector,
            text: None,
        }
    }

    pub fn path_step(&self) -> PathStep {
        let resource_id = match (&self.selector.resource_id, &self.selector.widget_class) {
            (Some(id), _) => id.clone(),
            (None, Some(class)) => simple_name(class).to_string(),
            (None, None) => String::new(),
        };
        PathStep {
            event: self.event,
            resource_id,
        }
    }

    pub fn perform<D: Driver + ?Sized>(&self, driver: &mut D) -> Result<EventOutcome, DriverError> {
        match self.event {
            EventKind::Tap | EventKind::Launch => driver.tap(&self.selector),
            EventKind::Toggle => driver.toggle(&self.selector),
            EventKind::SetText => driver.set_text(&self.selector, self.text.as_deref().unwrap_or("")),
            EventKind::Back => driver.press_back(),
        }
    }
}

/// Every combination of states for the first `fuzz_component_cap`
/// non-transitive widgets in breadth-first order. Assignment `i` sets widget
/// `j` (of `k`) to its "on" value iff bit `k - 1 - j` of `i` is set, so the
/// first assignment is all blank/unchecked/off.
pub fn fuzz_assignments(
    tree: &ComponentTree,
    target_package: &str,
    config: &ExplorationConfig,
) -> Vec<FuzzAssignment> {
    let targets: Vec<(Selector, NonTransitiveKind, String)> = bfs_nodes(tree, target_package)
        .into_iter()
        .filter(|n| n.enabled)
        .filter_map(|n| {
            non_transitive_kind(&n.widget_class).map(|k| (Selector::for_node(n), k, n.input_type.clone()))
        })
        .take(config.fuzz_component_cap)
        .collect();
    let k = targets.len();
    (0..1usize << k)
        .map(|i| FuzzAssignment {
            entries: targets
                .iter()
                .enumerate()
                .map(|(j, (selector, kind, input_type))| {
                    let on = i >> (k - 1 - j) & 1 == 1;
                    let value = match kind {
                        NonTransitiveKind::EditText if on => {
                            let seed = derive_seed(
                                config.rng_seed,
                                &[&tree.source_activity, &selector.to_string()],
                            );
                            FuzzValue::Text(generate_value(ExtraType::from_input_type(input_type), seed))
                        }
                        NonTransitiveKind::EditText => FuzzValue::Text(String::new()),
                        _ => FuzzValue::Checked(on),
                    };
                    FuzzEntry {
                        selector: selector.clone(),
                        kind: *kind,
                        value,
                    }
                })
                .collect(),
        })
        .collect()
}

/// The actions needed to bring `tree` into the state `assignment` asks for.
/// Entries whose widget is missing are returned separately.
pub fn plan_assignment(tree: &ComponentTree, assignment: &FuzzAssignment) -> (Vec<UiAction>, Vec<Selector>) {
    let mut actions = Vec::new();
    let mut missing = Vec::new();
    for entry in &assignment.entries {
        let Some(m) = match_component(tree, &entry.selector) else {
            missing.push(entry.selector.clone());
            continue;
        };
        match &entry.value {
            FuzzValue::Text(text) if m.node.text != *text => actions.push(UiAction {
                event: EventKind::SetText,
                selector: entry.selector.clone(),
                text: Some(text.clone()),
            }),
            FuzzValue::Checked(on) if m.node.checked != *on => actions.push(UiAction {
                event: EventKind::Toggle,
                selector: entry.selector.clone(),
                text: None,
            }),
            _ => {}
        }
    }
    (actions, missing)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ApplySummary {
    /// Actions issued, with their outcomes.
    pub issued: Vec<(UiAction, EventOutcome)>,
    /// Entries already in the requested state.
    pub unchanged: usize,
    pub not_found: Vec<Selector>,
}

/// Brings the current page into the requested state, issuing only the
/// actions whose widget differs from the request.
pub fn apply_assignment<D: Driver + ?Sized>(
    driver: &mut D,
    assignment: &FuzzAssignment,
) -> Result<ApplySummary, DriverError> {
    let dump = driver.current_dump()?;
    let tree = parse_hierarchy_dump(&dump.xml, dump.activity.as_deref().unwrap_or(""))
        .map_err(|e| DriverError::Failure(format!("unreadable dump: {e}")))?;
    let (actions, not_found) = plan_assignment(&tree, assignment);
    let unchanged = assignment.entries.len() - actions.len() - not_found.len();
    let mut issued = Vec::with_capacity(actions.len());
    for action in actions {
        let outcome = action.perform(driver)?;
        if outcome == EventOutcome::NotFound {
            log::warn!("fuzz target {} vanished while applying", action.selector);
        }
        issued.push((action, outcome));
    }
    Ok(ApplySummary {
        issued,
        unchanged,
        not_found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{to_hierarchy_xml, ComponentNode};

    fn widget(class: &str, id: &str) -> ComponentNode {
        ComponentNode {
            widget_class: class.into(),
            resource_id: id.into(),
            package: "com.ex".into(),
            enabled: true,
            clickable: true,
            ..Default::default()
        }
    }

    fn page(children: Vec<ComponentNode>) -> ComponentTree {
        let mut root = widget("android.widget.LinearLayout", "");
        root.children = children;
        root.reindex();
        ComponentTree {
            raw: to_hierarchy_xml(&root),
            root,
            source_activity: "com.ex.Main".into(),
        }
    }

    #[test]
    fn kinds_by_suffix() {
        use NonTransitiveKind::*;
        assert_eq!(non_transitive_kind("android.widget.EditText"), Some(EditText));
        assert_eq!(non_transitive_kind("androidx.appcompat.widget.AppCompatEditText"), Some(EditText));
        assert_eq!(non_transitive_kind("android.widget.CheckBox"), Some(Checkbox));
        assert_eq!(non_transitive_kind("androidx.appcompat.widget.SwitchCompat"), Some(Switch));
        assert_eq!(non_transitive_kind("android.widget.ToggleButton"), Some(Switch));
        assert_eq!(non_transitive_kind("android.widget.Button"), None);
        assert_eq!(non_transitive_kind("android.widget.TextView"), None);
    }

    #[test]
    fn three_widgets_give_eight_states() {
        let mut name = widget("android.widget.EditText", "name");
        name.input_type = "phone".into();
        let t = page(vec![name, widget("android.widget.CheckBox", "agree"), widget("android.widget.Switch", "wifi")]);
        let all = fuzz_assignments(&t, "com.ex", &ExplorationConfig::default());
        assert_eq!(all.len(), 8);
        let first = &all[0].entries;
        assert_eq!(first[0].value, FuzzValue::Text(String::new()));
        assert_eq!(first[1].value, FuzzValue::Checked(false));
        // index 4 = 0b100: only the first BFS widget is on
        let four = &all[4].entries;
        match &four[0].value {
            FuzzValue::Text(t) => assert!(t.len() == 11 && t.bytes().all(|b| b.is_ascii_digit())),
            other => panic!("{other:?}"),
        }
        assert_eq!((&four[1].value, &four[2].value), (&FuzzValue::Checked(false), &FuzzValue::Checked(false)));
        assert_eq!(all[1].entries[2].value, FuzzValue::Checked(true));
        let unique: std::collections::HashSet<_> = all.iter().map(|a| format!("{a:?}")).collect();
        assert_eq!(unique.len(), 8);
    }

    #[test]
    fn no_targets_gives_one_empty_assignment() {
        let t = page(vec![widget("android.widget.Button", "ok")]);
        assert_eq!(fuzz_assignments(&t, "com.ex", &ExplorationConfig::default()), vec![FuzzAssignment::default()]);
    }

    #[test]
    fn cap_pins_excess() {
        let boxes = (0..8).map(|i| widget("android.widget.CheckBox", &format!("cb{i}"))).collect();
        let all = fuzz_assignments(&page(boxes), "com.ex", &ExplorationConfig::default());
        assert_eq!(all.len(), 64);
        for a in &all {
            let ids: Vec<_> = a.entries.iter().map(|e| e.selector.resource_id.clone().unwrap()).collect();
            assert_eq!(ids, (0..6).map(|i| format!("cb{i}")).collect::<Vec<_>>());
        }
    }

    #[test]
    fn plan_skips_satisfied_entries() {
        let mut cb = widget("android.widget.CheckBox", "agree");
        cb.checked = true;
        let mut name = widget("android.widget.EditText", "name");
        name.text = "x".into();
        let t = page(vec![cb, name]);
        let asg = FuzzAssignment {
            entries: vec![
                FuzzEntry { selector: Selector::by_id("agree"), kind: NonTransitiveKind::Checkbox, value: FuzzValue::Checked(true) },
                FuzzEntry { selector: Selector::by_id("name"), kind: NonTransitiveKind::EditText, value: FuzzValue::Text(String::new()) },
                FuzzEntry { selector: Selector::by_id("gone"), kind: NonTransitiveKind::Switch, value: FuzzValue::Checked(true) },
            ],
        };
        let (actions, missing) = plan_assignment(&t, &asg);
        assert_eq!(actions.len(), 1);
        assert_eq!(actions[0].event, EventKind::SetText);
        assert_eq!(actions[0].text.as_deref(), Some(""));
        assert_eq!(missing, vec![Selector::by_id("gone")]);
    }
}
