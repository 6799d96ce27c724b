//! Scene identity against a separately written reference hash.

use std::collections::VecDeque;

use md5::{Digest, Md5};
use proptest::prelude::*;

use scenetg_core::layout::{parse_hierarchy_dump, to_hierarchy_xml, Bounds, ComponentNode, ComponentTree};
use scenetg_core::scene::scene_id;

const PKG: &str = "com.app";

fn hex(data: &[u8]) -> String {
    Md5::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

const ADAPTERS: [&str; 8] = [
    "ListView",
    "ExpandableListView",
    "GridView",
    "RecyclerView",
    "Spinner",
    "ViewPager",
    "Gallery",
    "StackView",
];

fn is_adapter(class: &str) -> bool {
    let simple = class.rsplit('.').next().unwrap_or(class);
    ADAPTERS.iter().any(|a| simple.ends_with(a))
}

/// Reference: BFS over kept nodes, an adapter contributes only its first kept
/// child's subtree.
fn reference_id(root: &ComponentNode) -> String {
    let mut concat = String::new();
    let mut queue = VecDeque::new();
    if root.package == PKG {
        queue.push_back(root);
    }
    while let Some(n) = queue.pop_front() {
        concat.push_str(&hex(format!("{}|{}|{}", n.resource_id, n.widget_class, n.package).as_bytes()));
        let kept = n.children.iter().filter(|c| c.package == PKG);
        if is_adapter(&n.widget_class) {
            queue.extend(kept.take(1));
        } else {
            queue.extend(kept);
        }
    }
    hex(concat.as_bytes())
}

const CLASSES: [&str; 8] = [
    "android.widget.LinearLayout",
    "android.widget.FrameLayout",
    "android.widget.TextView",
    "android.widget.Button",
    "android.widget.ListView",
    "androidx.recyclerview.widget.RecyclerView",
    "android.widget.Spinner",
    "android.widget.ImageView",
];

fn arb_node() -> impl Strategy<Value = ComponentNode> {
    let leaf = (0..CLASSES.len(), 0..6u8, prop::bool::weighted(0.1), "[ -~é中]{0,6}", any::<bool>()).prop_map(
        |(c, id, foreign, text, clickable)| ComponentNode {
            widget_class: CLASSES[c].into(),
            resource_id: if id == 0 { String::new() } else { format!("id{id}") },
            package: if foreign { "com.other".into() } else { PKG.into() },
            text,
            clickable,
            enabled: true,
            ..Default::default()
        },
    );
    leaf.prop_recursive(4, 40, 5, |inner| {
        (inner.clone(), prop::collection::vec(inner, 0..5)).prop_map(|(mut n, children)| {
            n.children = children;
            n
        })
    })
}

fn tree(mut root: ComponentNode) -> ComponentTree {
    root.package = PKG.into();
    root.reindex();
    ComponentTree {
        raw: to_hierarchy_xml(&root),
        root,
        source_activity: "com.app.Main".into(),
    }
}

fn scramble_values(n: &mut ComponentNode, salt: u32) {
    n.text = format!("v{salt}");
    n.checked = !n.checked;
    n.bounds = Bounds::new(0, 0, (salt % 500) as i32 + 1, 7).unwrap();
    for (i, c) in n.children.iter_mut().enumerate() {
        scramble_values(c, salt.wrapping_mul(31).wrapping_add(i as u32));
    }
}

/// Appends a copy of the first child to every adapter, recursively.
fn grow_adapters(n: &mut ComponentNode) {
    for c in &mut n.children {
        grow_adapters(c);
    }
    if is_adapter(&n.widget_class) && !n.children.is_empty() {
        let mut extra = n.children[0].clone();
        extra.text.push_str(" more");
        n.children.push(extra);
    }
}

proptest! {
    #[test]
    fn matches_reference(root in arb_node()) {
        let t = tree(root);
        prop_assert_eq!(scene_id(&t, PKG).to_string(), reference_id(&t.root));
    }

    #[test]
    fn volatile_attributes_do_not_matter(root in arb_node(), salt in any::<u32>()) {
        let a = tree(root.clone());
        let mut changed = root;
        scramble_values(&mut changed, salt);
        prop_assert_eq!(scene_id(&a, PKG), scene_id(&tree(changed), PKG));
    }

    #[test]
    fn extra_adapter_rows_do_not_matter(root in arb_node()) {
        let a = tree(root.clone());
        let mut grown = root;
        grow_adapters(&mut grown);
        prop_assert_eq!(scene_id(&a, PKG), scene_id(&tree(grown), PKG));
    }

    #[test]
    fn foreign_overlays_do_not_matter(root in arb_node(), overlay in arb_node()) {
        let a = tree(root.clone());
        let mut with = root;
        let mut foreign = overlay;
        foreign.package = "com.android.systemui".into();
        with.children.insert(0, foreign);
        prop_assert_eq!(scene_id(&a, PKG), scene_id(&tree(with), PKG));
    }

    #[test]
    fn root_resource_id_matters(root in arb_node()) {
        let a = tree(root.clone());
        let mut renamed = root;
        renamed.resource_id.push_str("_renamed");
        prop_assert_ne!(scene_id(&a, PKG), scene_id(&tree(renamed), PKG));
    }

    #[test]
    fn survives_the_dump_format(root in arb_node()) {
        let t = tree(root);
        let back = parse_hierarchy_dump(&t.raw, "com.app.Main").unwrap();
        prop_assert_eq!(scene_id(&t, PKG), scene_id(&back, PKG));
    }
}

#[test]
fn blank_page_is_md5_of_nothing() {
    let t = ComponentTree {
        raw: String::new(),
        root: ComponentNode { package: "com.other".into(), ..Default::default() },
        source_activity: String::new(),
    };
    assert_eq!(scene_id(&t, PKG).as_str(), "d41d8cd98f00b204e9800998ecf8427e");
}
