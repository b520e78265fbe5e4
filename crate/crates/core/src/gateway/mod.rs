//! Backends for the planner and the vision model.

mod http;
mod oracle;
mod scripted;
mod vlm;

pub use http::{
    completion_body, ChatClient, ChatExchange, ChatMessage, ChatRequest, HttpConfig, HttpPlanner, HttpVlm, RetryPolicy,
    ENV_API_BASE, ENV_API_KEY, ENV_MODEL, ENV_VLM_MODEL,
};
pub use oracle::OraclePlanner;
pub use scripted::{Script, ScriptEntry, ScriptedPlanner};
pub use vlm::{describe_prompt, parse_side_reply, side_prompt, SimulatedVlm, IMAGE_TOKENS};

use serde::{Deserialize, Serialize};

use crate::error::GatewayError;
use crate::scene::{SceneMap, Side};
use crate::sim::SimEnv;
use crate::task::Task;

pub const DEFAULT_MAX_TOKENS: u32 = 512;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Seconds; zero for the deterministic backends.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerReply {
    pub text: String,
    pub usage: BackendUsage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_request: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
}

impl PlannerReply {
    pub fn local(text: String, usage: BackendUsage) -> Self {
        Self { text, usage, raw_request: None, raw_response: None }
    }
}

/// What a planner may look at besides the messages it receives. Only the
/// oracle uses it.
#[derive(Debug, Clone, Copy)]
pub struct PlannerContext<'a> {
    pub scene: &'a SceneMap,
    pub task: Option<&'a Task>,
}

pub trait Planner: Send {
    fn name(&self) -> &str;
    /// First message of a conversation: the rendered prompt.
    fn initial(&mut self, prompt: &str, ctx: &PlannerContext<'_>) -> Result<PlannerReply, GatewayError>;
    /// A follow-up message, normally a feedback line.
    fn step(&mut self, feedback: &str, ctx: &PlannerContext<'_>) -> Result<PlannerReply, GatewayError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideAnswer {
    pub side: Side,
    pub color: String,
    pub shape: String,
}

pub trait Vlm: Send {
    fn table_side(&mut self, object: &str, env: &SimEnv) -> Result<(SideAnswer, BackendUsage), GatewayError>;
    fn describe(&mut self, object: &str, env: &SimEnv) -> Result<(String, BackendUsage), GatewayError>;
}
