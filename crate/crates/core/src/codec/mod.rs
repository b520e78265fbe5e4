//! Planner wire protocol: skill calls, plans, step replies, feedback lines
//! and the planner prompt.

mod feedback;
mod plan;
mod prompt;
pub mod relaxed;
mod skill;

pub use feedback::{join_names, parse_feedback, render_feedback, FeedbackEvent, FeedbackKind};
pub use plan::{parse_initial_plan, parse_step_reply, Plan, StepReply, Subtask};
pub use prompt::{approx_tokens, map_line, render_initial_prompt, render_initial_prompt_with, PromptOptions};
pub use skill::{parse_skill_call, Skill, SkillCall};
