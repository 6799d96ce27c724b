//! Scene-level GUI exploration for Android-style apps.
//!
//! The crate parses hierarchy dumps into component trees, reduces pages to
//! scene identifiers, drives an app (here, a deterministic simulator) through
//! launches and UI events, and records the resulting scene transition graph.

pub mod diff;
pub mod driver;
pub mod explore;
pub mod graph;
pub mod icc;
pub mod layout;
pub mod scene;
pub mod sim;
