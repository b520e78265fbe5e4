use serde_json::Value;

use super::{BackendUsage, SideAnswer, Vlm};
use crate::codec::relaxed::extract_object;
use crate::error::GatewayError;
use crate::scene::Side;
use crate::sim::SimEnv;

/// Token count charged for the image in every vision query.
pub const IMAGE_TOKENS: u64 = 196;
/// Completion tokens charged by the simulated side query.
const SIDE_REPLY_TOKENS: u64 = 20;

pub fn side_prompt(object: &str) -> String {
    format!(
        "Please tell me which side of the table the {object} is closer to:\n1. left side,\n2. right side,\n3. far side, \n4. close side. \nThe output should be the corresponding number and the color and shape of the object in JSON format."
    )
}

pub fn describe_prompt(object: &str) -> String {
    format!("Please tell me the details of {object} in the picture with a brief sentence")
}

fn word_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Reads the side code, color and shape out of a side-query reply.
pub fn parse_side_reply(text: &str) -> Result<SideAnswer, GatewayError> {
    let fail = || GatewayError::ParseFail(text.to_string());
    let root = extract_object(text).ok_or_else(fail)?;
    let map = root.as_object().ok_or_else(fail)?;
    let code = map
        .iter()
        .filter(|(k, _)| !matches!(k.as_str(), "color" | "shape"))
        .find_map(|(_, v)| match v {
            Value::Number(n) => n.as_u64(),
            Value::String(s) => s.trim().chars().next().and_then(|c| c.to_digit(10)).map(u64::from),
            _ => None,
        })
        .and_then(|n| u8::try_from(n).ok())
        .and_then(Side::from_code)
        .ok_or_else(fail)?;
    let text_field = |k: &str| map.get(k).and_then(Value::as_str).unwrap_or_default().to_lowercase();
    Ok(SideAnswer { side: code, color: text_field("color"), shape: text_field("shape") })
}

/// Answers from the simulator's ground truth.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimulatedVlm;

impl SimulatedVlm {
    fn answer(object: &str, env: &SimEnv) -> Result<SideAnswer, GatewayError> {
        let not_visible = |_| GatewayError::ObjectNotVisible(object.to_string());
        let id = env.locate_visible(object).map_err(not_visible)?;
        let side = env.table_side(object).map_err(not_visible)?;
        let obj = env.scene.object(id).ok_or_else(|| GatewayError::ObjectNotVisible(object.to_string()))?;
        Ok(SideAnswer {
            side,
            color: obj.attr("color").unwrap_or_default().to_string(),
            shape: obj.attr("shape").unwrap_or_default().to_string(),
        })
    }
}

impl Vlm for SimulatedVlm {
    fn table_side(&mut self, object: &str, env: &SimEnv) -> Result<(SideAnswer, BackendUsage), GatewayError> {
        let answer = Self::answer(object, env)?;
        let usage = BackendUsage {
            prompt_tokens: word_tokens(&side_prompt(object)) + IMAGE_TOKENS,
            completion_tokens: SIDE_REPLY_TOKENS,
            wall_time: 0.0,
        };
        Ok((answer, usage))
    }

    fn describe(&mut self, object: &str, env: &SimEnv) -> Result<(String, BackendUsage), GatewayError> {
        let a = Self::answer(object, env)?;
        let name = env
            .locate_visible(object)
            .ok()
            .and_then(|id| env.scene.object(id))
            .map(|o| o.name.clone())
            .unwrap_or_else(|| object.to_string());
        let sentence = format!("a {} {} {} on the {} side", a.color, a.shape, name, a.side);
        let usage = BackendUsage {
            prompt_tokens: word_tokens(&describe_prompt(object)) + IMAGE_TOKENS,
            completion_tokens: word_tokens(&sentence),
            wall_time: 0.0,
        };
        Ok((sentence, usage))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::canonical_scene;
    use crate::sim::{FaultModel, NavTarget, PerturbEvent};
    use rand::{Rng, SeedableRng};

    fn at_fruit_table() -> SimEnv {
        let mut env = SimEnv::new(canonical_scene(0), 0, FaultModel::default()).unwrap();
        env.exec_navigate(&NavTarget::Site { name: "fruit table".into(), side: None }).unwrap();
        env
    }

    #[test]
    fn apple_side_and_sentence() {
        let env = at_fruit_table();
        let (a, usage) = SimulatedVlm.table_side("apple", &env).unwrap();
        assert_eq!((a.side.code(), a.color.as_str(), a.shape.as_str()), (4, "red", "round"));
        assert!(usage.prompt_tokens > IMAGE_TOKENS);
        let (s, _) = SimulatedVlm.describe("apple", &env).unwrap();
        assert_eq!(s, "a red round apple on the close side");
        assert_eq!(SimulatedVlm.describe("apple", &env).unwrap().0, s);
    }

    #[test]
    fn removed_object_is_not_visible() {
        let mut env = at_fruit_table();
        let id = env.locate_visible("apple").unwrap();
        env.perturb(&PerturbEvent::RemoveObject { object: id }).unwrap();
        assert_eq!(
            SimulatedVlm.describe("apple", &env).unwrap_err(),
            GatewayError::ObjectNotVisible("apple".into())
        );
    }

    #[test]
    fn agrees_with_simulator_on_random_placements() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut env = at_fruit_table();
            let id = env.locate_visible("plum").unwrap();
            let side = Side::ALL[rng.gen_range(0..4)];
            env.perturb(&PerturbEvent::MoveObject { object: id, site: "fruit table".into(), side }).unwrap();
            let approach = Side::ALL[rng.gen_range(0..4)];
            env.exec_navigate(&NavTarget::Site { name: "fruit table".into(), side: Some(approach) }).unwrap();
            let (a, _) = SimulatedVlm.table_side("plum", &env).unwrap();
            assert_eq!(a.side, env.table_side("plum").unwrap());
        }
    }

    #[test]
    fn parses_side_replies() {
        let a = parse_side_reply("```json\n{\"number\": 3, \"color\": \"Red\", \"shape\": \"round\"}\n```").unwrap();
        assert_eq!((a.side, a.color.as_str()), (Side::Far, "red"));
        let b = parse_side_reply("{\"side\": \"2. right side\", \"color\": \"blue\"}").unwrap();
        assert_eq!(b.side, Side::Right);
        assert!(matches!(parse_side_reply("not json"), Err(GatewayError::ParseFail(_))));
        assert!(matches!(parse_side_reply("{\"number\": 9}"), Err(GatewayError::ParseFail(_))));
    }

    #[test]
    fn prompts_are_verbatim() {
        assert!(side_prompt("coke can").starts_with("Please tell me which side of the table the coke can is closer to:\n1. left side,"));
        assert_eq!(describe_prompt("apple"), "Please tell me the details of apple in the picture with a brief sentence");
    }
}
