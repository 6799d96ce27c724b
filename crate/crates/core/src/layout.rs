//! Component trees parsed from uiautomator-style hierarchy dumps.
//!
//! A dump is an XML document with a single `hierarchy` root element whose
//! one `node` child is the root component. Every `node` carries the widget
//! attributes the explorer reads (`class`, `package`, `resource-id`, `text`,
//! the interaction booleans and `bounds`). Attributes other than `class` and
//! `package` are optional and default to the empty string or `false`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("node at {line}:{column} is missing required attribute `{attribute}`")]
    MissingAttribute {
        attribute: &'static str,
        line: u32,
        column: u32,
    },
}

/// Pixel rectangle in screen coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bounds {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl Bounds {
    pub fn new(left: i32, top: i32, right: i32, bottom: i32) -> Option<Self> {
        (left <= right && top <= bottom).then_some(Self {
            left,
            top,
            right,
            bottom,
        })
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{}][{},{}]",
            self.left, self.top, self.right, self.bottom
        )
    }
}

impl FromStr for Bounds {
    type Err = String;

    /// Parses the dump notation `[l,t][r,b]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed bounds `{s}`");
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(bad)?;
        let (first, second) = inner.split_once("][").ok_or_else(bad)?;
        let pair = |p: &str| -> Result<(i32, i32), String> {
            let (a, b) = p.split_once(',').ok_or_else(bad)?;
            Ok((
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ))
        };
        let (left, top) = pair(first)?;
        let (right, bottom) = pair(second)?;
        Bounds::new(left, top, right, bottom)
            .ok_or_else(|| format!("inverted bounds `{s}`"))
    }
}

impl Serialize for Bounds {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bounds {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One widget of a UI page.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ComponentNode {
    pub widget_class: String,
    pub resource_id: String,
    pub package: String,
    pub text: String,
    pub bounds: Bounds,
    pub clickable: bool,
    pub checkable: bool,
    pub checked: bool,
    pub enabled: bool,
    pub scrollable: bool,
    pub long_clickable: bool,
    /// Declared input format of editable widgets; empty when not reported.
    pub input_type: String,
    /// Position among the parent's children.
    pub index: usize,
    pub children: Vec<ComponentNode>,
}

impl ComponentNode {
    /// Class name without its package qualifier.
    pub fn simple_class(&self) -> &str {
        simple_name(&self.widget_class)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Self::node_count).sum::<usize>()
    }

    /// Resolves a child-index path relative to this node.
    pub fn at_path(&self, path: &[usize]) -> Option<&ComponentNode> {
        path.iter()
            .try_fold(self, |node, &i| node.children.get(i))
    }

    /// Re-numbers `index` fields so they equal child positions.
    pub fn reindex(&mut self) {
        for (i, child) in self.children.iter_mut().enumerate() {
            child.index = i;
            child.reindex();
        }
    }
}

pub(crate) fn simple_name(class: &str) -> &str {
    class.rsplit(['.', '$']).next().unwrap_or(class)
}

/// Parsed UI hierarchy of one page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentTree {
    pub root: ComponentNode,
    pub source_activity: String,
    pub raw: String,
}

/// Attribute filter used to locate a widget on a page.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widget_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

impl Selector {
    pub fn by_id(resource_id: impl Into<String>) -> Self {
        Self {
            resource_id: Some(resource_id.into()),
            ..Self::default()
        }
    }

    pub fn by_class(widget_class: impl Into<String>) -> Self {
        Self {
            widget_class: Some(widget_class.into()),
            ..Self::default()
        }
    }

    /// The selector the explorer records for a widget it interacted with:
    /// id and class when the widget has an id, class and bounds otherwise.
    pub fn for_node(node: &ComponentNode) -> Self {
        if node.resource_id.is_empty() {
            Self {
                resource_id: None,
                widget_class: Some(node.widget_class.clone()),
                bounds: Some(node.bounds),
            }
        } else {
            Self {
                resource_id: Some(node.resource_id.clone()),
                widget_class: Some(node.widget_class.clone()),
                bounds: None,
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.resource_id.is_none() && self.widget_class.is_none() && self.bounds.is_none()
    }

    pub fn matches(&self, node: &ComponentNode) -> bool {
        !self.is_empty()
            && self.resource_id.as_ref().is_none_or(|id| *id == node.resource_id)
            && self
                .widget_class
                .as_ref()
                .is_none_or(|c| *c == node.widget_class)
            && self.bounds.is_none_or(|b| b == node.bounds)
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.resource_id, &self.widget_class, &self.bounds) {
            (Some(id), _, _) => f.write_str(id),
            (None, Some(class), Some(b)) => write!(f, "{}@{b}", simple_name(class)),
            (None, Some(class), None) => f.write_str(simple_name(class)),
            (None, None, Some(b)) => write!(f, "{b}"),
            (None, None, None) => f.write_str("*"),
        }
    }
}

/// Result of [`match_component`].
#[derive(Debug, Clone, Copy)]
pub struct Match<'a> {
    pub node: &'a ComponentNode,
    /// Total number of nodes the selector matched; more than one means the
    /// returned node was picked by breadth-first order.
    pub candidates: usize,
}

impl Match<'_> {
    pub fn is_ambiguous(&self) -> bool {
        self.candidates > 1
    }
}

fn pos_of(doc: &roxmltree::Document<'_>, node: roxmltree::Node<'_, '_>) -> (u32, u32) {
    let p = doc.text_pos_at(node.range().start);
    (p.row, p.col)
}

pub fn parse_hierarchy_dump(
    text: &str,
    source_activity: &str,
) -> Result<ComponentTree, LayoutError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let p = e.pos();
        LayoutError::Parse {
            line: p.row,
            column: p.col,
            message: e.to_string(),
        }
    })?;
    let top = doc.root_element();
    if top.tag_name().name() != "hierarchy" {
        let (line, column) = pos_of(&doc, top);
        return Err(LayoutError::Parse {
            line,
            column,
            message: format!("expected root element `hierarchy`, found `{}`", top.tag_name().name()),
        });
    }
    let mut roots = top.children().filter(|n| n.is_element());
    let first = roots.next().ok_or_else(|| {
        let (line, column) = pos_of(&doc, top);
        LayoutError::Parse {
            line,
            column,
            message: "hierarchy has no root node".into(),
        }
    })?;
    if let Some(extra) = roots.next() {
        let (line, column) = pos_of(&doc, extra);
        return Err(LayoutError::Parse {
            line,
            column,
            message: "hierarchy has more than one root node".into(),
        });
    }
    let mut root = parse_node(&doc, first)?;
    root.index = 0;
    Ok(ComponentTree {
        root,
        source_activity: source_activity.to_string(),
        raw: text.to_string(),
    })
}

fn parse_node(
    doc: &roxmltree::Document<'_>,
    el: roxmltree::Node<'_, '_>,
) -> Result<ComponentNode, LayoutError> {
    let (line, column) = pos_of(doc, el);
    if el.tag_name().name() != "node" {
        return Err(LayoutError::Parse {
            line,
            column,
            message: format!("unexpected element `{}`", el.tag_name().name()),
        });
    }
    let required = |attribute: &'static str| {
        el.attribute(attribute)
            .map(str::to_string)
            .ok_or(LayoutError::MissingAttribute {
                attribute,
                line,
                column,
            })
    };
    let optional = |name: &str| el.attribute(name).unwrap_or_default().to_string();
    let flag = |name: &str| -> Result<bool, LayoutError> {
        match el.attribute(name) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(other) => Err(LayoutError::Parse {
                line,
                column,
                message: format!("attribute `{name}` must be `true` or `false`, found `{other}`"),
            }),
        }
    };
    let bounds = match el.attribute("bounds") {
        None => Bounds::default(),
        Some(b) => b.parse().map_err(|message| LayoutError::Parse {
            line,
            column,
            message,
        })?,
    };
    let mut children = Vec::new();
    for child in el.children().filter(|n| n.is_element()) {
        let mut c = parse_node(doc, child)?;
        c.index = children.len();
        children.push(c);
    }
    Ok(ComponentNode {
        widget_class: required("class")?,
        package: required("package")?,
        resource_id: optional("resource-id"),
        text: optional("text"),
        input_type: optional("input-type"),
        bounds,
        clickable: flag("clickable")?,
        checkable: flag("checkable")?,
        checked: flag("checked")?,
        enabled: flag("enabled")?,
        scrollable: flag("scrollable")?,
        long_clickable: flag("long-clickable")?,
        index: 0,
        children,
    })
}

/// Renders a node tree in the hierarchy dump format read by
/// [`parse_hierarchy_dump`].
pub fn to_hierarchy_xml(root: &ComponentNode) -> String {
    let mut out = String::from("<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>\n<hierarchy rotation=\"0\">\n");
    write_node(&mut out, root, 1);
    out.push_str("</hierarchy>\n");
    out
}

fn write_node(out: &mut String, node: &ComponentNode, depth: usize) {
    use std::fmt::Write;
    let indent = "  ".repeat(depth);
    let _ = write!(
        out,
        "{indent}<node index=\"{}\" text=\"{}\" resource-id=\"{}\" class=\"{}\" package=\"{}\"",
        node.index,
        escape(&node.text),
        escape(&node.resource_id),
        escape(&node.widget_class),
        escape(&node.package),
    );
    if !node.input_type.is_empty() {
        let _ = write!(out, " input-type=\"{}\"", escape(&node.input_type));
    }
    let _ = write!(
        out,
        " checkable=\"{}\" checked=\"{}\" clickable=\"{}\" enabled=\"{}\" scrollable=\"{}\" long-clickable=\"{}\" bounds=\"{}\"",
        node.checkable,
        node.checked,
        node.clickable,
        node.enabled,
        node.scrollable,
        node.long_clickable,
        node.bounds,
    );
    if node.children.is_empty() {
        out.push_str(" />\n");
    } else {
        out.push_str(">\n");
        for child in &node.children {
            write_node(out, child, depth + 1);
        }
        let _ = writeln!(out, "{indent}</node>");
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            _ => out.push(c),
        }
    }
    out
}

/// Breadth-first walk that yields each node with its child-index path.
/// Nodes whose package differs from `target_package` are skipped together
/// with their whole subtree; `None` disables filtering.
pub fn bfs_with_paths<'a>(
    root: &'a ComponentNode,
    target_package: Option<&str>,
) -> Vec<(Vec<usize>, &'a ComponentNode)> {
    let keep = |n: &ComponentNode| target_package.is_none_or(|p| n.package == p);
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    if keep(root) {
        queue.push_back((Vec::new(), root));
    }
    while let Some((path, node)) = queue.pop_front() {
        for (i, child) in node.children.iter().enumerate() {
            if keep(child) {
                let mut p = path.clone();
                p.push(i);
                queue.push_back((p, child));
            }
        }
        out.push((path, node));
    }
    out
}

pub fn bfs_nodes<'a>(tree: &'a ComponentTree, target_package: &str) -> Vec<&'a ComponentNode> {
    bfs_with_paths(&tree.root, Some(target_package))
        .into_iter()
        .map(|(_, n)| n)
        .collect()
}

pub fn find_clickable<'a>(tree: &'a ComponentTree, target_package: &str) -> Vec<&'a ComponentNode> {
    bfs_nodes(tree, target_package)
        .into_iter()
        .filter(|n| n.clickable)
        .collect()
}

/// First breadth-first node matching `selector`. Ambiguous matches are
/// logged and reported through [`Match::candidates`].
pub fn match_component<'a>(tree: &'a ComponentTree, selector: &Selector) -> Option<Match<'a>> {
    match_with_path(&tree.root, selector).map(|(_, m)| m)
}

pub(crate) fn match_with_path<'a>(
    root: &'a ComponentNode,
    selector: &Selector,
) -> Option<(Vec<usize>, Match<'a>)> {
    let mut hits = bfs_with_paths(root, None)
        .into_iter()
        .filter(|(_, n)| selector.matches(n));
    let (path, node) = hits.next()?;
    let candidates = 1 + hits.count();
    if candidates > 1 {
        log::warn!("selector {selector} matched {candidates} nodes; using the first");
    }
    Some((path, Match { node, candidates }))
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb_node(depth: u32) -> impl Strategy<Value = ComponentNode> {
        let leaf = (
            prop::sample::select(vec!["android.widget.Button", "android.widget.TextView", "android.widget.LinearLayout"]),
            prop::sample::select(vec!["", "a", "b", "c"]),
            prop::sample::select(vec!["p", "p", "p", "q"]),
            "[a-z <&]{0,4}",
            any::<(bool, bool, bool, bool)>(),
            (0..100i32, 0..100i32),
        )
            .prop_map(|(class, id, pkg, text, (clickable, checked, enabled, scrollable), (l, t))| ComponentNode {
                widget_class: class.into(),
                resource_id: id.into(),
                package: pkg.into(),
                text,
                clickable,
                checked,
                enabled,
                scrollable,
                bounds: Bounds::new(l, t, l + 10, t + 10).unwrap(),
                ..Default::default()
            });
        leaf.prop_recursive(depth, 24, 4, |inner| {
            (inner.clone(), prop::collection::vec(inner, 0..4)).prop_map(|(mut n, children)| {
                n.children = children;
                n
            })
        })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(mut root in arb_node(4)) {
            root.reindex();
            let xml = to_hierarchy_xml(&root);
            let parsed = parse_hierarchy_dump(&xml, "A").unwrap();
            prop_assert_eq!(parsed.root, root);
        }

        #[test]
        fn clickable_is_ordered_subsequence_of_bfs(mut root in arb_node(4)) {
            root.reindex();
            let t = ComponentTree { raw: String::new(), source_activity: "A".into(), root };
            let bfs = bfs_nodes(&t, "p");
            let clicks = find_clickable(&t, "p");
            let mut it = bfs.iter();
            for c in &clicks {
                prop_assert!(it.any(|b| std::ptr::eq(*b, *c)));
            }
            // subtree-closed filtering: no visited node has a foreign ancestor
            let kept: Vec<_> = bfs_with_paths(&t.root, Some("p"));
            for (path, n) in kept {
                prop_assert_eq!(n.package.as_str(), "p");
                for cut in 0..path.len() {
                    prop_assert_eq!(t.root.at_path(&path[..cut]).unwrap().package.as_str(), "p");
                }
            }
        }
    }
}
