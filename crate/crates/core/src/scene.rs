//! Scene identifiers.
//!
//! A page is reduced to the breadth-first sequence of its target-package
//! nodes, with every adapter view collapsed to its first child. Each node
//! contributes `md5(resource_id|class|package)`; the page identifier is the
//! MD5 of those hex digests concatenated in order. Text, check state, bounds
//! and the other volatile attributes never reach the hash, so pages that
//! differ only in displayed values share one scene.

use std::fmt;

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};

use crate::layout::{bfs_with_paths, ComponentNode, ComponentTree};

/// Simple class names treated as adapter-backed containers; matched as a
/// suffix of the class simple name so support-library variants qualify.
pub const ADAPTER_VIEWS: [&str; 8] = [
    "ListView",
    "ExpandableListView",
    "GridView",
    "RecyclerView",
    "Spinner",
    "ViewPager",
    "Gallery",
    "StackView",
];

/// 32 lowercase hex characters identifying a scene.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SceneId(String);

impl SceneId {
    /// Accepts an existing identifier, e.g. one read back from an export.
    pub fn parse(s: &str) -> Option<Self> {
        (s.len() == 32 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')))
            .then(|| Self(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn short(&self) -> &str {
        &self.0[..8]
    }
}

impl fmt::Display for SceneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn md5_hex(data: &[u8]) -> String {
    let digest = Md5::digest(data);
    let mut out = String::with_capacity(32);
    for b in digest.iter() {
        out.push(char::from(b"0123456789abcdef"[(b >> 4) as usize]));
        out.push(char::from(b"0123456789abcdef"[(b & 0xf) as usize]));
    }
    out
}

pub fn node_signature(node: &ComponentNode) -> String {
    format!("{}|{}|{}", node.resource_id, node.widget_class, node.package)
}

pub fn node_hash(node: &ComponentNode) -> String {
    md5_hex(node_signature(node).as_bytes())
}

pub fn is_adapter_view(node: &ComponentNode) -> bool {
    let simple = node.simple_class();
    ADAPTER_VIEWS.iter().any(|a| simple.ends_with(a))
}

/// The tree actually hashed: foreign-package subtrees removed, then every
/// adapter view (recursively) reduced to its first remaining child.
/// `None` when the root itself belongs to another package.
pub fn normalize(root: &ComponentNode, target_package: &str) -> Option<ComponentNode> {
    if root.package != target_package {
        return None;
    }
    let mut children: Vec<ComponentNode> = root
        .children
        .iter()
        .filter_map(|c| normalize(c, target_package))
        .collect();
    if is_adapter_view(root) {
        children.truncate(1);
    }
    let mut node = ComponentNode {
        children: Vec::new(),
        ..root.clone()
    };
    node.children = children;
    node.reindex();
    Some(node)
}

pub fn scene_id(tree: &ComponentTree, target_package: &str) -> SceneId {
    let mut concat = String::new();
    if let Some(norm) = normalize(&tree.root, target_package) {
        for (_, node) in bfs_with_paths(&norm, None) {
            concat.push_str(&node_hash(node));
        }
    }
    SceneId(md5_hex(concat.as_bytes()))
}

/// Identifier used when scene abstraction is switched off: the digest of the
/// full dump text, so every byte-level difference is a distinct state.
pub fn raw_state_id(tree: &ComponentTree) -> SceneId {
    SceneId(md5_hex(tree.raw.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::to_hierarchy_xml;

    fn node(class: &str, id: &str, children: Vec<ComponentNode>) -> ComponentNode {
        let mut n = ComponentNode {
            widget_class: class.into(),
            resource_id: id.into(),
            package: "com.ex".into(),
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

    // RFC 1321 appendix A.5 test suite.
    #[test]
    fn md5_conformance() {
        let vectors = [
            ("", "d41d8cd98f00b204e9800998ecf8427e"),
            ("a", "0cc175b9c0f1b6a831c399e269772661"),
            ("abc", "900150983cd24fb0d6963f7d28e17f72"),
            ("message digest", "f96b697d7cb7938d525a2f31aaf161d0"),
            ("abcdefghijklmnopqrstuvwxyz", "c3fcd3d76192e4007dfb496cca67e13b"),
            (
                "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789",
                "d174ab98d277d9f5a5611c2c9f419d9f",
            ),
            (
                "12345678901234567890123456789012345678901234567890123456789012345678901234567890",
                "57edf4a22be3c955ac49da2e2107b67a",
            ),
        ];
        for (input, expected) in vectors {
            assert_eq!(md5_hex(input.as_bytes()), expected, "md5({input:?})");
        }
    }

    #[test]
    fn node_hash_uses_signature_triple() {
        let n = node("android.view.View", "", vec![]);
        assert_eq!(node_signature(&n), "|android.view.View|com.ex");
        // Python: hashlib.md5(b"|android.view.View|com.ex").hexdigest()
        assert_eq!(node_hash(&n), "b0423b22a1284ac800cbfa58d892f1a1");
        let mut t = n.clone();
        t.text = "hello".into();
        t.checked = true;
        assert_eq!(node_hash(&n), node_hash(&t));
    }

    #[test]
    fn adapter_classes() {
        assert!(is_adapter_view(&node("android.widget.ListView", "", vec![])));
        assert!(is_adapter_view(&node("androidx.recyclerview.widget.RecyclerView", "", vec![])));
        assert!(is_adapter_view(&node("androidx.appcompat.widget.AppCompatSpinner", "", vec![])));
        assert!(!is_adapter_view(&node("android.widget.Button", "", vec![])));
        assert!(!is_adapter_view(&node("android.widget.ScrollView", "", vec![])));
    }

    #[test]
    fn empty_page_hashes_empty_string() {
        let t = tree(node("F", "", vec![]));
        assert_eq!(scene_id(&t, "com.other").as_str(), "d41d8cd98f00b204e9800998ecf8427e");
    }

    #[test]
    fn palette_variants_are_one_scene() {
        let page = |color: &str| {
            let mut label = node("android.widget.TextView", "color_name", vec![]);
            label.text = color.into();
            tree(node("android.widget.FrameLayout", "", vec![label, node("android.widget.Button", "pick", vec![])]))
        };
        assert_eq!(scene_id(&page("Red"), "com.ex"), scene_id(&page("Blue"), "com.ex"));
    }

    #[test]
    fn adapter_rows_collapse() {
        let row = || node("android.widget.LinearLayout", "row", vec![node("android.widget.TextView", "title", vec![])]);
        let list = |n: usize| {
            tree(node(
                "android.widget.FrameLayout",
                "",
                vec![node("android.widget.ListView", "list", (0..n).map(|_| row()).collect())],
            ))
        };
        let one = scene_id(&list(1), "com.ex");
        let five = scene_id(&list(5), "com.ex");
        assert_eq!(one, five);
        // Independent oracle: spell out the collapsed BFS sequence by hand.
        let seq = [
            "|android.widget.FrameLayout|com.ex",
            "list|android.widget.ListView|com.ex",
            "row|android.widget.LinearLayout|com.ex",
            "title|android.widget.TextView|com.ex",
        ];
        let concat: String = seq.iter().map(|s| md5_hex(s.as_bytes())).collect();
        assert_eq!(one.as_str(), md5_hex(concat.as_bytes()));
        // an empty adapter contributes only itself
        let empty = scene_id(&list(0), "com.ex");
        let concat: String = seq[..2].iter().map(|s| md5_hex(s.as_bytes())).collect();
        assert_eq!(empty.as_str(), md5_hex(concat.as_bytes()));
    }

    #[test]
    fn nested_adapters_collapse_recursively() {
        let inner = |n: usize| node("androidx.recyclerview.widget.RecyclerView", "inner", (0..n).map(|_| node("V", "cell", vec![])).collect());
        let outer = |n: usize| tree(node("android.widget.GridView", "outer", vec![node("R", "row", vec![inner(n)]), node("R", "row", vec![])]));
        assert_eq!(scene_id(&outer(1), "com.ex"), scene_id(&outer(4), "com.ex"));
        assert_ne!(scene_id(&outer(0), "com.ex"), scene_id(&outer(1), "com.ex"));
    }

    #[test]
    fn scene_id_parse() {
        assert!(SceneId::parse("d41d8cd98f00b204e9800998ecf8427e").is_some());
        assert!(SceneId::parse("D41D8CD98F00B204E9800998ECF8427E").is_none());
        assert!(SceneId::parse("abc").is_none());
    }
}
