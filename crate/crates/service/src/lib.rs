//! Command-line and HTTP front end for the restoration planner, with
//! file-backed session persistence.

pub mod api;
pub mod error;
pub mod shorthand;
pub mod store;

pub use api::{router, AppState, SessionView, StatsView, WhatIfView};
pub use error::ApiError;
pub use store::{Quarantined, SessionRecord, Store};

use resto_core::Action;

/// `{2} {1,4} {3}`; empty when there is nothing to do.
pub fn format_sequence(seq: &[Action]) -> String {
    seq.iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}
