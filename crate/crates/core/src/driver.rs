//! The device-facing contract the explorer drives.
//!
//! Calls on one driver are strictly sequential; after any event the next
//! [`Driver::current_dump`] reflects the resulting UI.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::icc::IccMessage;
use crate::layout::Selector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LaunchReason {
    Ok,
    NotExported,
    MissingExtra,
    WrongType,
    Undeclared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaunchResult {
    pub success: bool,
    pub reason: LaunchReason,
}

impl LaunchResult {
    pub fn ok() -> Self {
        Self {
            success: true,
            reason: LaunchReason::Ok,
        }
    }

    pub fn failed(reason: LaunchReason) -> Self {
        debug_assert!(reason != LaunchReason::Ok);
        Self {
            success: false,
            reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventOutcome {
    /// The event produced a different UI.
    UiChanged,
    /// The event was delivered but nothing visible changed.
    NoUiChange,
    /// No widget matched the selector.
    NotFound,
    /// The event left the app; nothing is running now.
    AppExited,
}

/// Snapshot returned by [`Driver::current_dump`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dump {
    pub xml: String,
    /// Foreground activity, `None` when no app activity is showing.
    pub activity: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DriverError {
    #[error("device disconnected: {0}")]
    Disconnected(String),
    #[error("driver failure: {0}")]
    Failure(String),
}

pub trait Driver {
    fn launch_activity(&mut self, icc: &IccMessage) -> Result<LaunchResult, DriverError>;
    fn current_dump(&mut self) -> Result<Dump, DriverError>;
    fn tap(&mut self, selector: &Selector) -> Result<EventOutcome, DriverError>;
    fn set_text(&mut self, selector: &Selector, value: &str) -> Result<EventOutcome, DriverError>;
    fn toggle(&mut self, selector: &Selector) -> Result<EventOutcome, DriverError>;
    fn press_back(&mut self) -> Result<EventOutcome, DriverError>;
    fn screenshot_ref(&mut self) -> Result<String, DriverError>;
}
