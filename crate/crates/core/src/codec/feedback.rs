//! The `#feedback:` message grammar.
//!
//! ```text
//! #feedback: navigation success, there are A, B and C on the table
//! #feedback: navigation success, there are A on the table
//! #feedback: navigation success, there is nothing on the table
//! #feedback: pick up success
//! #feedback: place success
//! #feedback: navigation failed, <detail>
//! #feedback: pick up failed, <detail>
//! #feedback: place failed, <detail>
//! ```
//!
//! Object names in an observation must not contain `", "` or `" and "`.

use serde::{Deserialize, Serialize};

use crate::error::CodecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    NavSuccess,
    NavFail,
    PickSuccess,
    PickFail,
    PlaceSuccess,
    PlaceFail,
}

impl FeedbackKind {
    pub const ALL: [FeedbackKind; 6] = [
        FeedbackKind::NavSuccess,
        FeedbackKind::NavFail,
        FeedbackKind::PickSuccess,
        FeedbackKind::PickFail,
        FeedbackKind::PlaceSuccess,
        FeedbackKind::PlaceFail,
    ];

    pub fn is_success(self) -> bool {
        matches!(self, FeedbackKind::NavSuccess | FeedbackKind::PickSuccess | FeedbackKind::PlaceSuccess)
    }

    fn verb(self) -> &'static str {
        match self {
            FeedbackKind::NavSuccess | FeedbackKind::NavFail => "navigation",
            FeedbackKind::PickSuccess | FeedbackKind::PickFail => "pick up",
            FeedbackKind::PlaceSuccess | FeedbackKind::PlaceFail => "place",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub kind: FeedbackKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl FeedbackEvent {
    pub fn nav_success(observation: Vec<String>) -> Self {
        Self { kind: FeedbackKind::NavSuccess, observation: Some(observation), detail: None }
    }

    pub fn success(kind: FeedbackKind) -> Self {
        Self { kind, observation: None, detail: None }
    }

    pub fn failure(kind: FeedbackKind, detail: impl Into<String>) -> Self {
        Self { kind, observation: None, detail: Some(detail.into()) }
    }
}

const PREFIX: &str = "#feedback: ";
const NOTHING: &str = "there is nothing on the table";

/// Joins names as `A, B and C`.
pub fn join_names(names: &[String]) -> String {
    match names {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

pub fn render_feedback(event: &FeedbackEvent) -> String {
    let verb = event.kind.verb();
    if event.kind.is_success() {
        match (&event.kind, &event.observation) {
            (FeedbackKind::NavSuccess, Some(obs)) if obs.is_empty() => {
                format!("{PREFIX}{verb} success, {NOTHING}")
            }
            (FeedbackKind::NavSuccess, Some(obs)) => {
                format!("{PREFIX}{verb} success, there are {} on the table", join_names(obs))
            }
            (FeedbackKind::NavSuccess, None) => format!("{PREFIX}{verb} success, {NOTHING}"),
            _ => format!("{PREFIX}{verb} success"),
        }
    } else {
        format!("{PREFIX}{verb} failed, {}", event.detail.as_deref().unwrap_or_default())
    }
}

/// Inverse of [`render_feedback`].
pub fn parse_feedback(text: &str) -> Result<FeedbackEvent, CodecError> {
    let bad = || CodecError::BadFeedback(text.to_string());
    let body = text
        .trim_end_matches(['\r', '\n'])
        .strip_prefix("#feedback:")
        .ok_or_else(bad)?
        .trim_start();
    for kind in FeedbackKind::ALL {
        let verb = kind.verb();
        let Some(rest) = body.strip_prefix(verb) else { continue };
        if kind.is_success() {
            let Some(rest) = rest.strip_prefix(" success") else { continue };
            if kind != FeedbackKind::NavSuccess {
                return if rest.is_empty() { Ok(FeedbackEvent::success(kind)) } else { Err(bad()) };
            }
            let rest = rest.strip_prefix(", ").ok_or_else(bad)?;
            if rest == NOTHING {
                return Ok(FeedbackEvent::nav_success(Vec::new()));
            }
            let list = rest
                .strip_prefix("there are ")
                .and_then(|r| r.strip_suffix(" on the table"))
                .ok_or_else(bad)?;
            return Ok(FeedbackEvent::nav_success(split_names(list)));
        } else if let Some(detail) = rest.strip_prefix(" failed, ") {
            return Ok(FeedbackEvent::failure(kind, detail));
        }
    }
    Err(bad())
}

fn split_names(list: &str) -> Vec<String> {
    match list.rsplit_once(" and ") {
        Some((init, last)) => init.split(", ").chain(std::iter::once(last)).map(str::to_string).collect(),
        None => vec![list.to_string()],
    }
}
