//! The instruction set: catalog, preconditions and dispatch.

use serde::{Deserialize, Serialize};

use crate::codec::{FeedbackEvent, FeedbackKind, Skill, SkillCall};
use crate::error::SimError;
use crate::scene::SceneMap;
use crate::sim::{NavTarget, SimEnv, DETAIL_UNREACHABLE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkillSpec {
    pub name: Skill,
    pub param_schema: &'static str,
    pub returns: &'static str,
}

pub fn skill_catalog() -> Vec<SkillSpec> {
    vec![
        SkillSpec {
            name: Skill::Navigate,
            param_schema: "site name (text) | x, y (meters)",
            returns: "result: bool, observation: object names, traveled: meters",
        },
        SkillSpec { name: Skill::Pick, param_schema: "object name (text)", returns: "result: bool" },
        SkillSpec { name: Skill::Place, param_schema: "none", returns: "result: bool" },
        SkillSpec { name: Skill::Done, param_schema: "none", returns: "result: bool" },
    ]
}

/// Result of running one skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillOutcome {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traveled: Option<f64>,
    #[serde(default)]
    pub detail: String,
}

impl SkillOutcome {
    pub fn success() -> Self {
        Self { ok: true, observation: None, traveled: None, detail: String::new() }
    }

    pub fn navigated(traveled: f64, observation: Vec<String>) -> Self {
        Self { ok: true, observation: Some(observation), traveled: Some(traveled), detail: String::new() }
    }

    pub fn failure(detail: impl Into<String>) -> Self {
        Self { ok: false, observation: None, traveled: None, detail: detail.into() }
    }

    pub fn with_traveled(mut self, traveled: f64) -> Self {
        self.traveled = Some(traveled);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum PreconditionViolation {
    HoldOne,
    NothingHeld,
    UnknownSite { site: String },
}

impl PreconditionViolation {
    /// Text used as the failure detail sent back to the planner.
    pub fn detail(&self) -> String {
        match self {
            PreconditionViolation::HoldOne => "the robot can only hold one object at a time".into(),
            PreconditionViolation::NothingHeld => "the robot is not holding anything".into(),
            PreconditionViolation::UnknownSite { site } => format!("there is no table named {site}"),
        }
    }
}

pub fn check_preconditions(call: &SkillCall, scene: &SceneMap) -> Result<(), PreconditionViolation> {
    match call.skill {
        Skill::Navigate => match call.site() {
            Some(site) if scene.site(site).is_none() => {
                Err(PreconditionViolation::UnknownSite { site: site.to_string() })
            }
            _ => Ok(()),
        },
        Skill::Pick if scene.robot.held.is_some() => Err(PreconditionViolation::HoldOne),
        Skill::Place if scene.robot.held.is_none() => Err(PreconditionViolation::NothingHeld),
        _ => Ok(()),
    }
}

pub fn nav_target(call: &SkillCall) -> Option<NavTarget> {
    if let Some(site) = call.site() {
        return Some(NavTarget::Site { name: site.to_string(), side: None });
    }
    call.coords().map(|(x, y)| NavTarget::Coords { x, y })
}

/// Feedback message content for an outcome. `None` for `done`.
pub fn feedback_for(skill: Skill, outcome: &SkillOutcome) -> Option<FeedbackEvent> {
    let (ok, fail) = match skill {
        Skill::Navigate => (FeedbackKind::NavSuccess, FeedbackKind::NavFail),
        Skill::Pick => (FeedbackKind::PickSuccess, FeedbackKind::PickFail),
        Skill::Place => (FeedbackKind::PlaceSuccess, FeedbackKind::PlaceFail),
        Skill::Done => return None,
    };
    Some(match (outcome.ok, skill) {
        (true, Skill::Navigate) => FeedbackEvent::nav_success(outcome.observation.clone().unwrap_or_default()),
        (true, _) => FeedbackEvent::success(ok),
        (false, _) => FeedbackEvent::failure(fail, outcome.detail.clone()),
    })
}

/// Runs a call that passed [`check_preconditions`].
pub fn dispatch(call: &SkillCall, env: &mut SimEnv, descriptor_hint: Option<&str>) -> Result<SkillOutcome, SimError> {
    if let Err(v) = check_preconditions(call, &env.scene) {
        return Err(SimError::PreconditionBypassed(v.detail()));
    }
    match call.skill {
        Skill::Navigate => {
            let target = nav_target(call).ok_or_else(|| SimError::PreconditionBypassed(call.to_string()))?;
            match env.exec_navigate(&target) {
                Err(SimError::Unreachable) => Ok(SkillOutcome::failure(DETAIL_UNREACHABLE).with_traveled(0.0)),
                other => other,
            }
        }
        Skill::Pick => {
            let object = call.object().ok_or_else(|| SimError::PreconditionBypassed(call.to_string()))?;
            env.exec_pick(object, descriptor_hint)
        }
        Skill::Place => env.exec_place(),
        Skill::Done => Ok(SkillOutcome::success()),
    }
}
