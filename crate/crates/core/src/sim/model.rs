//! Declarative mock-app definitions.
//!
//! An [`AppModel`] lists activities, each a stack of scenes with a widget
//! layout and tap-driven transitions. The field tables live in
//! `docs/app-model.md`.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ActivityEdge, EdgeOrigin, EventKind};
use crate::icc::{ExtraSpec, ExtraType, IccSpec};
use crate::layout::Selector;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read model {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("dangling reference at `{path}`: `{target}` is not defined")]
    DanglingReference { path: String, target: String },
}

fn yes() -> bool {
    true
}

fn tap() -> EventKind {
    EventKind::Tap
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppModel {
    pub package: String,
    pub activities: Vec<ActivityModel>,
    #[serde(default)]
    pub seed_atg: Vec<SeedEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedEdge {
    pub caller: String,
    pub callee: String,
    #[serde(default = "tap")]
    pub event: EventKind,
    pub component: Selector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityModel {
    pub name: String,
    /// Present in the manifest; undeclared activities never launch from outside.
    #[serde(default = "yes")]
    pub declared: bool,
    /// Exported for external launches.
    #[serde(default = "yes")]
    pub directly_launchable: bool,
    #[serde(default)]
    pub required_extras: Vec<RequiredExtra>,
    /// Launch information as a static collector would report it. Defaults to
    /// the true requirements when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub icc: Option<StaticIcc>,
    pub scenes: Vec<SceneModel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequiredExtra {
    pub key: String,
    #[serde(rename = "type")]
    pub ty: ExtraType,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticIcc {
    #[serde(default)]
    pub action: Option<String>,
    #[serde(default)]
    pub category: Option<String>,
    #[serde(default)]
    pub data_uri: Option<String>,
    #[serde(default)]
    pub extras: Vec<ExtraSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneModel {
    pub name: String,
    pub layout: WidgetModel,
    #[serde(default)]
    pub transitions: Vec<TransitionModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidgetModel {
    #[serde(rename = "class")]
    pub widget_class: String,
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub clickable: bool,
    #[serde(default)]
    pub checkable: bool,
    #[serde(default)]
    pub checked: bool,
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub scrollable: bool,
    #[serde(default)]
    pub long_clickable: bool,
    #[serde(default)]
    pub input_type: String,
    /// Owning package when different from the app (system overlays).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub package: Option<String>,
    /// The node is rendered only while every condition holds.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub visible_when: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<WidgetModel>,
}

impl WidgetModel {
    pub fn is_editable(&self) -> bool {
        crate::layout::simple_name(&self.widget_class).ends_with("EditText")
    }
}

/// Predicate over one widget's current state. Exactly one test is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub widget: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checked: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filled: Option<bool>,
    /// Text parses under the given value format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<ExtraType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionModel {
    pub widget: String,
    #[serde(default = "tap")]
    pub event: EventKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guard: Vec<Condition>,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Target {
    /// Push a scene of the same activity.
    Scene(String),
    /// Replace the top scene (tab or bottom-navigation switch).
    ReplaceScene(String),
    /// Start another activity on top of this one.
    Activity(String),
    /// Change a widget's text in place.
    SetText { widget: String, text: String },
    /// Same as the system back key.
    Back,
    /// Finish every activity.
    Exit,
}

pub fn load_app_model(path: &Path) -> Result<AppModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    AppModel::from_json(&text)
}

impl AppModel {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let model: AppModel =
            serde_path_to_error::deserialize(de).map_err(|e| ModelError::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn activity(&self, name: &str) -> Option<&ActivityModel> {
        self.activities.iter().find(|a| a.name == name)
    }

    pub fn activity_index(&self, name: &str) -> Option<usize> {
        self.activities.iter().position(|a| a.name == name)
    }

    /// Checks uniqueness and resolves every cross-reference.
    pub fn validate(&self) -> Result<(), ModelError> {
        let schema = |path: String, message: &str| ModelError::Schema {
            path,
            message: message.to_string(),
        };
        if self.package.is_empty() {
            return Err(schema("package".into(), "must not be empty"));
        }
        if self.activities.is_empty() {
            return Err(schema("activities".into(), "at least one activity is required"));
        }
        let mut names = BTreeSet::new();
        for (ai, act) in self.activities.iter().enumerate() {
            if act.name.is_empty() || !names.insert(act.name.as_str()) {
                return Err(schema(format!("activities[{ai}].name"), "activity names must be unique and non-empty"));
            }
        }
        for (ai, act) in self.activities.iter().enumerate() {
            let base = format!("activities[{ai}]");
            if act.scenes.is_empty() {
                return Err(schema(format!("{base}.scenes"), "an activity needs an entry scene"));
            }
            let scene_names: BTreeSet<_> = act.scenes.iter().map(|s| s.name.as_str()).collect();
            if scene_names.len() != act.scenes.len() {
                return Err(schema(format!("{base}.scenes"), "scene names must be unique within an activity"));
            }
            let mut keys = BTreeSet::new();
            for (ei, e) in act.required_extras.iter().enumerate() {
                if !keys.insert(e.key.as_str()) {
                    return Err(schema(format!("{base}.required_extras[{ei}].key"), "duplicate extra key"));
                }
            }
            for (si, scene) in act.scenes.iter().enumerate() {
                let sbase = format!("{base}.scenes[{si}]");
                let mut ids = HashMap::new();
                collect_ids(&scene.layout, &format!("{sbase}.layout"), &mut ids)?;
                check_conditions(&scene.layout, &format!("{sbase}.layout"), &ids)?;
                for (ti, t) in scene.transitions.iter().enumerate() {
                    let tbase = format!("{sbase}.transitions[{ti}]");
                    if !ids.contains_key(t.widget.as_str()) {
                        return Err(ModelError::DanglingReference {
                            path: format!("{tbase}.widget"),
                            target: t.widget.clone(),
                        });
                    }
                    for (gi, c) in t.guard.iter().enumerate() {
                        check_condition(c, &format!("{tbase}.guard[{gi}]"), &ids)?;
                    }
                    let dangling = |target: &str| ModelError::DanglingReference {
                        path: format!("{tbase}.target"),
                        target: target.to_string(),
                    };
                    match &t.target {
                        Target::Scene(s) | Target::ReplaceScene(s) if !scene_names.contains(s.as_str()) => {
                            return Err(dangling(s))
                        }
                        Target::Activity(a) if !names.contains(a.as_str()) => return Err(dangling(a)),
                        Target::SetText { widget, .. } if !ids.contains_key(widget.as_str()) => {
                            return Err(dangling(widget))
                        }
                        _ => {}
                    }
                }
            }
        }
        for (i, e) in self.seed_atg.iter().enumerate() {
            for (field, name) in [("caller", &e.caller), ("callee", &e.callee)] {
                if !names.contains(name.as_str()) {
                    return Err(ModelError::DanglingReference {
                        path: format!("seed_atg[{i}].{field}"),
                        target: name.clone(),
                    });
                }
            }
            if e.component.is_empty() {
                return Err(schema(format!("seed_atg[{i}].component"), "selector needs at least one field"));
            }
        }
        Ok(())
    }

    /// What the explorer is allowed to know up front: the activity list with
    /// statically collected launch messages, and the seed ATG.
    pub fn app_input(&self) -> AppInput {
        let activities = self
            .activities
            .iter()
            .map(|a| {
                let icc = a.icc.clone().unwrap_or_else(|| StaticIcc {
                    extras: a
                        .required_extras
                        .iter()
                        .map(|e| ExtraSpec {
                            key: e.key.clone(),
                            ty: e.ty.as_str().to_string(),
                        })
                        .collect(),
                    ..StaticIcc::default()
                });
                IccSpec {
                    target_activity: a.name.clone(),
                    action: icc.action,
                    category: icc.category,
                    data_uri: icc.data_uri,
                    extras: icc.extras,
                }
            })
            .collect();
        let seed_atg = self
            .seed_atg
            .iter()
            .map(|e| ActivityEdge {
                caller: e.caller.clone(),
                callee: e.callee.clone(),
                event: e.event,
                component: e.component.clone(),
                origin: EdgeOrigin::Seed,
            })
            .collect();
        AppInput {
            package: self.package.clone(),
            activities,
            seed_atg,
        }
    }
}

/// Static inputs to an exploration run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppInput {
    pub package: String,
    pub activities: Vec<IccSpec>,
    pub seed_atg: Vec<ActivityEdge>,
}

fn collect_ids<'a>(
    w: &'a WidgetModel,
    path: &str,
    ids: &mut HashMap<&'a str, String>,
) -> Result<(), ModelError> {
    if w.widget_class.is_empty() {
        return Err(ModelError::Schema {
            path: format!("{path}.class"),
            message: "must not be empty".into(),
        });
    }
    if !w.id.is_empty() && ids.insert(w.id.as_str(), path.to_string()).is_some() {
        return Err(ModelError::Schema {
            path: format!("{path}.id"),
            message: format!("widget id `{}` is used twice in one scene", w.id),
        });
    }
    for (i, c) in w.children.iter().enumerate() {
        collect_ids(c, &format!("{path}.children[{i}]"), ids)?;
    }
    Ok(())
}

fn check_conditions(w: &WidgetModel, path: &str, ids: &HashMap<&str, String>) -> Result<(), ModelError> {
    for (i, c) in w.visible_when.iter().enumerate() {
        check_condition(c, &format!("{path}.visible_when[{i}]"), ids)?;
    }
    for (i, c) in w.children.iter().enumerate() {
        check_conditions(c, &format!("{path}.children[{i}]"), ids)?;
    }
    Ok(())
}

fn check_condition(c: &Condition, path: &str, ids: &HashMap<&str, String>) -> Result<(), ModelError> {
    if !ids.contains_key(c.widget.as_str()) {
        return Err(ModelError::DanglingReference {
            path: format!("{path}.widget"),
            target: c.widget.clone(),
        });
    }
    let tests = [c.checked.is_some(), c.filled.is_some(), c.valid.is_some()];
    if tests.iter().filter(|t| **t).count() != 1 {
        return Err(ModelError::Schema {
            path: path.to_string(),
            message: "a condition needs exactly one of `checked`, `filled`, `valid`".into(),
        });
    }
    Ok(())
}
