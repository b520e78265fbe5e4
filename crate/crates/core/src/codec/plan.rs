use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::relaxed::extract_object;
use super::skill::{parse_skill_call, SkillCall};
use crate::error::CodecError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtask {
    pub desc: String,
    pub calls: Vec<SkillCall>,
}

/// An initial plan in canonical structured form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub reasoning: String,
    pub subtasks: Vec<Subtask>,
    pub first_action: SkillCall,
}

impl Plan {
    /// Builds a plan whose first action is the first call.
    pub fn new(reasoning: impl Into<String>, subtasks: Vec<Subtask>) -> Self {
        let first_action = subtasks
            .iter()
            .flat_map(|s| s.calls.iter())
            .next()
            .cloned()
            .unwrap_or_else(SkillCall::done);
        Self { reasoning: reasoning.into(), subtasks, first_action }
    }

    /// All calls in order.
    pub fn flatten(&self) -> Vec<SkillCall> {
        self.subtasks.iter().flat_map(|s| s.calls.iter().cloned()).collect()
    }

    /// Structured wire form, accepted back by [`parse_initial_plan`].
    pub fn to_json(&self) -> Value {
        let call = |c: &SkillCall| json!({"skill": c.skill.wire_name(), "params": c.params});
        json!({
            "reasoning": self.reasoning,
            "action_list": self.subtasks.iter().map(|s| json!({
                "desc": s.desc,
                "action_list": s.calls.iter().map(call).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "first_action": call(&self.first_action),
        })
    }

    pub fn encode(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("plan serializes")
    }
}

/// A planner reply to one feedback message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReply {
    pub reasoning: String,
    pub next_action: SkillCall,
}

impl StepReply {
    pub fn encode(&self) -> String {
        serde_json::to_string_pretty(&json!({
            "step_by_step_reasoning": self.reasoning,
            "next_action": self.next_action.to_string(),
        }))
        .expect("reply serializes")
    }
}

/// Parses the planner's first reply, in either the numbered-sentence form or
/// the structured form.
pub fn parse_initial_plan(text: &str) -> Result<Plan, CodecError> {
    let root = extract_object(text).ok_or(CodecError::NoJsonFound)?;
    let reasoning = root
        .get("reasoning")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let list = root
        .get("action_list")
        .and_then(Value::as_array)
        .ok_or_else(|| CodecError::SchemaMismatch("action_list".into()))?;

    let mut subtasks = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        subtasks.push(match item {
            Value::String(sentence) => sentence_subtask(sentence)?,
            Value::Object(_) => structured_subtask(item, &format!("action_list[{i}]"))?,
            _ => return Err(CodecError::SchemaMismatch(format!("action_list[{i}]"))),
        });
    }

    let first_call = subtasks.iter().flat_map(|s| s.calls.iter()).next().cloned();
    let first_action = match root.get("first_action") {
        None | Some(Value::Null) => first_call.clone().unwrap_or_else(SkillCall::done),
        Some(v) => action_value(v, "first_action")?,
    };
    if first_call.as_ref() != Some(&first_action) {
        subtasks.insert(0, Subtask { desc: "first action".into(), calls: vec![first_action.clone()] });
    }
    Ok(Plan { reasoning, subtasks, first_action })
}

/// Parses a reply to a feedback message.
pub fn parse_step_reply(text: &str) -> Result<StepReply, CodecError> {
    let root = extract_object(text).ok_or(CodecError::NoJsonFound)?;
    let reasoning = root
        .get("step_by_step_reasoning")
        .or_else(|| root.get("reasoning"))
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let action = root.get("next_action").ok_or(CodecError::MissingNextAction)?;
    Ok(StepReply { reasoning, next_action: action_value(action, "next_action")? })
}

/// A call given as a string, as `{skill, params}`, or wrapped in a
/// `{next_action: ...}` object.
fn action_value(v: &Value, path: &str) -> Result<SkillCall, CodecError> {
    match v {
        Value::String(s) => parse_skill_call(s),
        Value::Object(map) => {
            if let Some(inner) = map.get("next_action") {
                return action_value(inner, &format!("{path}.next_action"));
            }
            object_call(v, path)
        }
        _ => Err(CodecError::SchemaMismatch(path.to_string())),
    }
}

fn object_call(v: &Value, path: &str) -> Result<SkillCall, CodecError> {
    let name = v
        .get("skill")
        .and_then(Value::as_str)
        .ok_or_else(|| CodecError::SchemaMismatch(format!("{path}.skill")))?;
    let params = match v.get("params") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|p| match p {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(CodecError::SchemaMismatch(format!("{path}.params"))),
            })
            .collect::<Result<_, _>>()?,
        Some(Value::String(s)) => vec![s.clone()],
        Some(_) => return Err(CodecError::SchemaMismatch(format!("{path}.params"))),
    };
    SkillCall::from_parts(name, &params)
}

fn structured_subtask(v: &Value, path: &str) -> Result<Subtask, CodecError> {
    let desc = v.get("desc").and_then(Value::as_str).unwrap_or_default().to_string();
    let calls = match v.get("action_list").or_else(|| v.get("calls")) {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(j, c)| action_value(c, &format!("{path}.action_list[{j}]")))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(CodecError::SchemaMismatch(format!("{path}.action_list"))),
    };
    Ok(Subtask { desc, calls })
}

struct SentencePatterns {
    index: Regex,
    explicit: Regex,
    navigate: Regex,
    pick: Regex,
    place: Regex,
}

fn patterns() -> &'static SentencePatterns {
    static RE: OnceLock<SentencePatterns> = OnceLock::new();
    RE.get_or_init(|| {
        const END: &str = r"(?:\s+and\b|\s+from\b|\s+on\b|\s+to\b|\s+in\b|\s*[,.;]|$)";
        let re = |s: &str| Regex::new(s).expect("valid regex");
        SentencePatterns {
            index: re(r"^\s*\d+\s*[.)]\s*"),
            explicit: re(r"\b(?:go_to|pick_up|navigate|place|done)\s*[\(\[][^\)\]]*[\)\]]|\bdone\b\s*$"),
            navigate: re(&format!(
                r"\b(?:go|goes|navigate|move|return|head|walk)\s+(?:back\s+)?to\s+(?:the\s+)?([a-z0-9 _]+?)(?:\s+and\b|\s*[,.;]|$)"
            )),
            pick: re(&format!(
                r"\b(?:pick\s+up|pick|grasp|grab|fetch)\s+(?:the\s+|a\s+|an\s+)?([a-z0-9 _]+?){END}"
            )),
            place: re(r"\b(?:place|put)\b"),
        }
    })
}

/// Extracts skill calls from one numbered plan sentence by verb keywords.
/// Sentences without a recognizable call become description-only subtasks.
fn sentence_subtask(sentence: &str) -> Result<Subtask, CodecError> {
    let p = patterns();
    let desc = p.index.replace(sentence.trim(), "").trim().to_string();
    let lower = desc.to_lowercase();

    if let Some(m) = p.explicit.find(&lower) {
        return Ok(Subtask { calls: vec![parse_skill_call(m.as_str())?], desc });
    }

    let mut found: Vec<(usize, SkillCall)> = Vec::new();
    for caps in p.navigate.captures_iter(&lower) {
        found.push((caps.get(0).unwrap().start(), SkillCall::navigate(&caps[1])));
    }
    for caps in p.pick.captures_iter(&lower) {
        found.push((caps.get(0).unwrap().start(), SkillCall::pick(&caps[1])));
    }
    if let Some(m) = p.place.find(&lower) {
        found.push((m.start(), SkillCall::place()));
    }
    found.sort_by_key(|(at, _)| *at);
    Ok(Subtask { desc, calls: found.into_iter().map(|(_, c)| c).collect() })
}
