use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::CodecError;
use crate::scene::normalize_label;

/// The four entries of the instruction set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Skill {
    Navigate,
    Pick,
    Place,
    Done,
}

impl Skill {
    pub const ALL: [Skill; 4] = [Skill::Navigate, Skill::Pick, Skill::Place, Skill::Done];

    /// Resolves a skill name or one of its surface aliases.
    pub fn from_name(name: &str) -> Option<Skill> {
        let key: String = name
            .trim()
            .to_lowercase()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c })
            .collect();
        Some(match key.as_str() {
            "navigate" | "go_to" | "goto" | "navigate_to" | "move_to" | "go" => Skill::Navigate,
            "pick" | "pick_up" | "pickup" | "grasp" => Skill::Pick,
            "place" | "put" | "put_down" => Skill::Place,
            "done" | "finish" => Skill::Done,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Skill::Navigate => "navigate",
            Skill::Pick => "pick",
            Skill::Place => "place",
            Skill::Done => "done",
        }
    }

    /// Spelling used when talking to the planner.
    pub fn wire_name(self) -> &'static str {
        match self {
            Skill::Navigate => "go_to",
            Skill::Pick => "pick_up",
            Skill::Place => "place",
            Skill::Done => "done",
        }
    }
}

impl fmt::Display for Skill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One skill invocation in canonical form.
///
/// Text parameters are normalized labels (lowercase, `_` as space, no
/// leading article). Navigation by coordinates carries two numeric params.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SkillCall {
    pub skill: Skill,
    #[serde(default)]
    pub params: Vec<String>,
}

impl SkillCall {
    pub fn navigate(site: &str) -> Self {
        Self { skill: Skill::Navigate, params: vec![normalize_label(site)] }
    }

    pub fn navigate_xy(x: f64, y: f64) -> Self {
        Self { skill: Skill::Navigate, params: vec![format_coord(x), format_coord(y)] }
    }

    pub fn pick(object: &str) -> Self {
        Self { skill: Skill::Pick, params: vec![normalize_label(object)] }
    }

    pub fn place() -> Self {
        Self { skill: Skill::Place, params: Vec::new() }
    }

    pub fn done() -> Self {
        Self { skill: Skill::Done, params: Vec::new() }
    }

    /// Builds a call from a skill name and raw params, enforcing arity.
    pub fn from_parts(name: &str, params: &[String]) -> Result<Self, CodecError> {
        let skill = Skill::from_name(name).ok_or_else(|| CodecError::UnknownSkill(name.trim().to_string()))?;
        let params: Vec<&str> = params.iter().map(|p| p.trim()).filter(|p| !p.is_empty()).collect();
        let malformed = || {
            CodecError::MalformedCall(format!("{}({})", name.trim(), params.join(", ")))
        };
        match skill {
            Skill::Navigate => match params.as_slice() {
                [site] => Ok(Self::navigate(site)),
                [x, y] => {
                    let (x, y) = (x.parse::<f64>(), y.parse::<f64>());
                    match (x, y) {
                        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => Ok(Self::navigate_xy(x, y)),
                        _ => Err(malformed()),
                    }
                }
                _ => Err(malformed()),
            },
            Skill::Pick => match params.as_slice() {
                [object] => Ok(Self::pick(object)),
                _ => Err(malformed()),
            },
            // A place target is tolerated and dropped.
            Skill::Place => Ok(Self::place()),
            Skill::Done if params.is_empty() => Ok(Self::done()),
            Skill::Done => Err(malformed()),
        }
    }

    /// The site name of a navigate-by-name call.
    pub fn site(&self) -> Option<&str> {
        match (self.skill, self.params.as_slice()) {
            (Skill::Navigate, [site]) => Some(site),
            _ => None,
        }
    }

    /// The (x, y) target of a navigate-by-coordinates call, in meters.
    pub fn coords(&self) -> Option<(f64, f64)> {
        match (self.skill, self.params.as_slice()) {
            (Skill::Navigate, [x, y]) => Some((x.parse().ok()?, y.parse().ok()?)),
            _ => None,
        }
    }

    pub fn object(&self) -> Option<&str> {
        match (self.skill, self.params.as_slice()) {
            (Skill::Pick, [object]) => Some(object),
            _ => None,
        }
    }
}

fn format_coord(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Planner-facing spelling, e.g. `go_to(fruit table)` or `done`.
impl fmt::Display for SkillCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.skill {
            Skill::Done => f.write_str("done"),
            Skill::Place => f.write_str("place()"),
            s => write!(f, "{}({})", s.wire_name(), self.params.join(", ")),
        }
    }
}

fn call_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:\d+\s*[.)]\s*)?([A-Za-z][A-Za-z_ -]*?)\s*(?:(?:\((.*)\))|(?:\[(.*)\]))?\s*\.?$")
            .expect("valid regex")
    })
}

/// Parses `name(arg)`, `name[arg]` or a bare `name`, with an optional
/// `1.` index prefix.
pub fn parse_skill_call(text: &str) -> Result<SkillCall, CodecError> {
    let trimmed = text.trim();
    let caps = call_pattern()
        .captures(trimmed)
        .ok_or_else(|| CodecError::MalformedCall(trimmed.to_string()))?;
    let name = &caps[1];
    let args = caps.get(2).or_else(|| caps.get(3)).map_or("", |m| m.as_str());
    let skill = Skill::from_name(name).ok_or_else(|| CodecError::UnknownSkill(name.trim().to_string()))?;
    let params: Vec<String> = match skill {
        // Only coordinates are split on commas; names are single params.
        Skill::Navigate if args.split(',').count() == 2 && args.split(',').all(|p| p.trim().parse::<f64>().is_ok()) => {
            args.split(',').map(str::to_string).collect()
        }
        _ if args.trim().is_empty() => Vec::new(),
        _ => vec![args.to_string()],
    };
    SkillCall::from_parts(name, &params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_spellings() {
        assert_eq!(parse_skill_call("pick_up(lemon)").unwrap(), SkillCall::pick("lemon"));
        assert_eq!(parse_skill_call("1.go_to[fruit table]").unwrap(), SkillCall::navigate("fruit table"));
        assert_eq!(parse_skill_call("1. go_to[drink table]").unwrap(), SkillCall::navigate("drink table"));
        assert_eq!(parse_skill_call("go_to(purchase table)").unwrap(), SkillCall::navigate("purchase table"));
        assert_eq!(parse_skill_call("place(bottle of water)").unwrap(), SkillCall::place());
        assert_eq!(parse_skill_call("done").unwrap(), SkillCall::done());
        assert_eq!(parse_skill_call(" done() ").unwrap(), SkillCall::done());
    }

    #[test]
    fn coordinates() {
        let call = parse_skill_call("navigate(1.5, 2)").unwrap();
        assert_eq!(call.coords(), Some((1.5, 2.0)));
        assert_eq!(call.params, vec!["1.50", "2.00"]);
    }

    #[test]
    fn unknown_and_malformed() {
        assert_eq!(parse_skill_call("fly_to(moon)"), Err(CodecError::UnknownSkill("fly_to".into())));
        assert!(matches!(parse_skill_call("pick_up()"), Err(CodecError::MalformedCall(_))));
        assert!(matches!(SkillCall::from_parts("go_to", &["a".into(), "b".into()]), Err(CodecError::MalformedCall(_))));
        assert!(matches!(parse_skill_call("{}"), Err(CodecError::MalformedCall(_))));
    }

    #[test]
    fn names_are_normalized() {
        assert_eq!(parse_skill_call("pick_up(Pepsi_can)").unwrap(), SkillCall::pick("pepsi can"));
        assert_eq!(parse_skill_call("GO_TO(The Drink Table)").unwrap().site(), Some("drink table"));
    }

    #[test]
    fn display_round_trips() {
        for call in [
            SkillCall::navigate("fruit table"),
            SkillCall::navigate_xy(1.25, 4.0),
            SkillCall::pick("toy duck"),
            SkillCall::place(),
            SkillCall::done(),
        ] {
            assert_eq!(parse_skill_call(&call.to_string()).unwrap(), call);
        }
    }
}
