use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendUsage, Planner, PlannerContext, PlannerReply};
use crate::codec::approx_tokens;
use crate::error::{ConfigError, GatewayError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    /// Substring the incoming message must contain; empty matches anything.
    #[serde(default)]
    pub expect: String,
    pub reply: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub entries: Vec<ScriptEntry>,
}

impl Script {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path.display().to_string(), e))?;
        Self::from_json(&text).map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })
    }
}

/// Replays canned replies in order, checking each incoming message.
#[derive(Debug, Clone)]
pub struct ScriptedPlanner {
    script: Script,
    cursor: usize,
}

impl ScriptedPlanner {
    pub fn new(script: Script) -> Self {
        Self { script, cursor: 0 }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.script.entries.len() - self.cursor
    }

    fn next(&mut self, stimulus: &str) -> Result<PlannerReply, GatewayError> {
        let entry = self.script.entries.get(self.cursor).ok_or(GatewayError::ScriptExhausted)?;
        if !stimulus.contains(&entry.expect) {
            return Err(GatewayError::ScriptMismatch {
                expected: entry.expect.clone(),
                got: stimulus.chars().take(200).collect(),
            });
        }
        self.cursor += 1;
        let usage = BackendUsage {
            prompt_tokens: approx_tokens(stimulus) as u64,
            completion_tokens: approx_tokens(&entry.reply) as u64,
            wall_time: 0.0,
        };
        Ok(PlannerReply::local(entry.reply.clone(), usage))
    }
}

impl Planner for ScriptedPlanner {
    fn name(&self) -> &str {
        "scripted"
    }

    fn initial(&mut self, prompt: &str, _ctx: &PlannerContext<'_>) -> Result<PlannerReply, GatewayError> {
        self.next(prompt)
    }

    fn step(&mut self, feedback: &str, _ctx: &PlannerContext<'_>) -> Result<PlannerReply, GatewayError> {
        self.next(feedback)
    }
}
