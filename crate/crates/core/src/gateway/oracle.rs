use std::collections::BTreeSet;

use super::{BackendUsage, Planner, PlannerContext, PlannerReply};
use crate::codec::{approx_tokens, parse_feedback, FeedbackEvent, FeedbackKind, Plan, SkillCall, StepReply, Subtask, Skill};
use crate::error::GatewayError;
use crate::scene::{Location, ObjectId, SceneMap};
use crate::sim::{FaultModel, NavTarget, SimEnv, DETAIL_OUT_OF_RANGE};
use crate::skills::{dispatch, feedback_for};
use crate::task::{interpret_instruction, Goal, Quantity, Task};

/// Upper bound on calls when simulating the initial plan.
const PLAN_CALL_LIMIT: usize = 400;

/// Rule-based planner that reads the true scene instead of the messages.
#[derive(Debug, Clone, Default)]
pub struct OraclePlanner {
    live: Option<Tracker>,
}

impl OraclePlanner {
    pub fn new() -> Self {
        Self::default()
    }

    /// The plan the oracle would emit for `task` on `scene`.
    pub fn plan(task: &Task, scene: &SceneMap) -> Result<Plan, GatewayError> {
        let tracker = Tracker::new(&task.goals, scene)?;
        simulate(tracker, scene)
    }
}

fn usage(input: &str, output: &str) -> BackendUsage {
    BackendUsage {
        prompt_tokens: approx_tokens(input) as u64,
        completion_tokens: approx_tokens(output) as u64,
        wall_time: 0.0,
    }
}

fn instruction_of(prompt: &str) -> &str {
    prompt
        .rsplit_once("#instruction:")
        .map(|(_, rest)| rest.trim())
        .unwrap_or(prompt.trim())
}

impl Planner for OraclePlanner {
    fn name(&self) -> &str {
        "oracle"
    }

    fn initial(&mut self, prompt: &str, ctx: &PlannerContext<'_>) -> Result<PlannerReply, GatewayError> {
        let goals = match ctx.task {
            Some(task) if task.has_goals() => task.goals.clone(),
            Some(task) => interpret_instruction(&task.instruction, ctx.scene),
            None => interpret_instruction(instruction_of(prompt), ctx.scene),
        };
        let tracker = Tracker::new(&goals, ctx.scene)?;
        let plan = simulate(tracker.clone(), ctx.scene)?;
        self.live = Some(tracker);
        let text = plan.encode();
        let usage = usage(prompt, &text);
        Ok(PlannerReply::local(text, usage))
    }

    fn step(&mut self, feedback: &str, ctx: &PlannerContext<'_>) -> Result<PlannerReply, GatewayError> {
        let tracker = self.live.as_mut().ok_or(GatewayError::ImpossibleTask("no task in progress".into()))?;
        let event = parse_feedback(feedback).ok();
        let (next_action, reasoning) = tracker.decide(ctx.scene, event.as_ref())?;
        let text = StepReply { reasoning, next_action }.encode();
        let usage = usage(feedback, &text);
        Ok(PlannerReply::local(text, usage))
    }
}

/// Goal bookkeeping shared by plan simulation and live stepping.
#[derive(Debug, Clone)]
struct Tracker {
    goals: Vec<Goal>,
    candidates: Vec<Vec<ObjectId>>,
    initial: SceneMap,
    cursor: usize,
    delivered: Vec<BTreeSet<ObjectId>>,
    last_held: Option<ObjectId>,
    target: Option<ObjectId>,
}

fn site_name(scene: &SceneMap, label: &str) -> Option<String> {
    scene.site(label).map(|s| s.name.clone())
}

impl Tracker {
    fn new(goals: &[Goal], scene: &SceneMap) -> Result<Self, GatewayError> {
        if goals.is_empty() {
            return Err(GatewayError::ImpossibleTask("no goal could be derived from the task".into()));
        }
        let mut candidates = Vec::with_capacity(goals.len());
        for goal in goals {
            if let Some(site) = &goal.visit {
                if scene.site(site).is_none() {
                    return Err(GatewayError::ImpossibleTask(format!("unknown site {site}")));
                }
                candidates.push(Vec::new());
                continue;
            }
            let to = goal.to.as_deref().unwrap_or_default();
            if scene.site(to).is_none() {
                return Err(GatewayError::ImpossibleTask(format!("unknown destination {to:?}")));
            }
            let ids = goal.candidates(scene);
            if ids.is_empty() {
                let what = goal.object.clone().unwrap_or_else(|| format!("{:?}", goal.attrs));
                return Err(GatewayError::ImpossibleTask(format!("no {what} anywhere in the scene")));
            }
            candidates.push(ids);
        }
        Ok(Self {
            goals: goals.to_vec(),
            candidates,
            initial: scene.clone(),
            cursor: 0,
            delivered: vec![BTreeSet::new(); goals.len()],
            last_held: scene.robot.held,
            target: None,
        })
    }

    fn dest(&self, i: usize) -> String {
        site_name(&self.initial, self.goals[i].to.as_deref().unwrap_or_default()).unwrap_or_default()
    }

    /// Whether goal `i` may use object `id`.
    fn accepts(&self, i: usize, id: ObjectId) -> bool {
        self.candidates[i].contains(&id)
            && !self
                .delivered
                .iter()
                .enumerate()
                .any(|(j, set)| j != i && self.goals[j].verify && set.contains(&id))
    }

    fn complete(&self, i: usize, scene: &SceneMap) -> bool {
        let goal = &self.goals[i];
        if let Some(site) = &goal.visit {
            let faced = scene.faced_site().map(|(s, _)| s.name.clone());
            return faced.is_some() && faced == site_name(scene, site);
        }
        match goal.quantity {
            Quantity::One => !self.delivered[i].is_empty(),
            Quantity::All => {
                let dest = self.dest(i);
                self.candidates[i].iter().all(|id| match scene.object(*id) {
                    None => true,
                    Some(o) => o.location.site() == Some(dest.as_str()),
                })
            }
        }
    }

    fn credit(&mut self, scene: &SceneMap) {
        if let Some(id) = self.last_held {
            if scene.robot.held != Some(id) && self.cursor < self.goals.len() {
                let dest = self.dest(self.cursor);
                let at = scene.object(id).and_then(|o| o.location.site().map(str::to_string));
                if at.as_deref() == Some(dest.as_str()) && self.accepts(self.cursor, id) {
                    self.delivered[self.cursor].insert(id);
                }
            }
        }
        self.last_held = scene.robot.held;
    }

    fn decide(
        &mut self,
        scene: &SceneMap,
        feedback: Option<&FeedbackEvent>,
    ) -> Result<(SkillCall, String), GatewayError> {
        self.credit(scene);
        while self.cursor < self.goals.len() && self.complete(self.cursor, scene) {
            self.cursor += 1;
        }
        let faced = scene.faced_site().map(|(s, side)| (s.name.clone(), side));
        let faced_name = faced.as_ref().map(|(n, _)| n.as_str());

        if let Some(held) = scene.held_object() {
            let (id, name) = (held.id, held.name.clone());
            if self.cursor < self.goals.len() && self.accepts(self.cursor, id) {
                let dest = self.dest(self.cursor);
                return Ok(if faced_name == Some(dest.as_str()) {
                    (SkillCall::place(), format!("I am holding the {name} at the {dest}, so I will place it here."))
                } else {
                    (SkillCall::navigate(&dest), format!("I am holding the {name}; it belongs on the {dest}."))
                });
            }
            if let Some(site) = faced_name {
                return Ok((SkillCall::place(), format!("The {name} is not needed, so I will put it back on the {site}.")));
            }
            let home = self
                .initial
                .object(id)
                .and_then(|o| o.location.site().map(str::to_string))
                .unwrap_or_else(|| scene.sites[0].name.clone());
            return Ok((SkillCall::navigate(&home), format!("The {name} is not needed; I will return it to the {home}.")));
        }

        if self.cursor >= self.goals.len() {
            return Ok((SkillCall::done(), "Every requested object is where it should be.".into()));
        }
        let goal = &self.goals[self.cursor];
        if let Some(site) = &goal.visit {
            return Ok((SkillCall::navigate(site), format!("I need to be at the {site}.")));
        }

        if let (Some(ev), Some(target)) = (feedback, self.target) {
            if ev.kind == FeedbackKind::PickFail && ev.detail.as_deref() == Some(DETAIL_OUT_OF_RANGE) {
                if let Some(call) = approach_call(scene, target) {
                    return Ok((call, "The object is out of reach from here; I will move to its side of the table.".into()));
                }
            }
        }

        let dest = self.dest(self.cursor);
        let mut targets: Vec<(bool, ObjectId, String, String)> = self.candidates[self.cursor]
            .iter()
            .filter(|id| self.accepts(self.cursor, **id))
            .filter_map(|id| scene.object(*id))
            .filter_map(|o| {
                let site = o.location.site()?.to_string();
                (site != dest).then(|| (Some(site.as_str()) != faced_name, o.id, o.name.clone(), site))
            })
            .collect();
        targets.sort();
        let Some((_, id, name, site)) = targets.into_iter().next() else {
            return Err(GatewayError::ImpossibleTask(format!(
                "nothing left to move for goal {} ({})",
                self.cursor + 1,
                goal.object.clone().unwrap_or_else(|| format!("{:?}", goal.attrs))
            )));
        };
        self.target = Some(id);
        Ok(if faced_name == Some(site.as_str()) {
            (SkillCall::pick(&name), format!("The {name} is on this table, so I will pick it up."))
        } else {
            (SkillCall::navigate(&site), format!("The {name} is on the {site}, so I will go there first."))
        })
    }
}

/// Navigate-to-coordinates call for the approach cell on the side where
/// `target` rests.
fn approach_call(scene: &SceneMap, target: ObjectId) -> Option<SkillCall> {
    let Location::At { site, side } = &scene.object(target)?.location else { return None };
    let ap = scene.site(site)?.approach_points.get(side)?;
    let (x, y) = scene.grid.cell_center(ap.cell);
    Some(SkillCall::navigate_xy(x, y))
}

/// Runs the tracker against a fault-free copy of the scene and records its
/// calls as the initial plan.
fn simulate(mut tracker: Tracker, scene: &SceneMap) -> Result<Plan, GatewayError> {
    let mut env = SimEnv::new(scene.clone(), 0, FaultModel::default()).expect("default faults are valid");
    let mut subtasks = Vec::new();
    let mut last: Option<FeedbackEvent> = None;
    for _ in 0..PLAN_CALL_LIMIT {
        let (call, _) = tracker.decide(&env.scene, last.as_ref())?;
        if call.skill == Skill::Done {
            let reasoning = format!(
                "There {} to satisfy. For each object I go to the table it is on, pick it up, carry it to its destination and place it.",
                if tracker.goals.len() == 1 { "is one goal".to_string() } else { format!("are {} goals", tracker.goals.len()) }
            );
            return Ok(Plan::new(reasoning, subtasks));
        }
        let desc = match call.skill {
            Skill::Navigate => match call.site() {
                Some(site) => format!("Go to the {site}"),
                None => format!("Move to {}", call.params.join(", ")),
            },
            Skill::Pick => format!("Pick up the {}", call.object().unwrap_or_default()),
            _ => format!(
                "Place the {} on the {}",
                env.scene.held_object().map(|o| o.name.clone()).unwrap_or_default(),
                env.scene.faced_site().map(|(s, _)| s.name.clone()).unwrap_or_default()
            ),
        };
        if call.skill == Skill::Pick {
            refine_side(&mut env, call.object().unwrap_or_default());
        }
        let outcome = dispatch(&call, &mut env, None)
            .map_err(|e| GatewayError::ImpossibleTask(format!("plan simulation failed: {e}")))?;
        last = feedback_for(call.skill, &outcome);
        subtasks.push(Subtask { desc, calls: vec![call] });
    }
    Err(GatewayError::ImpossibleTask("plan does not terminate".into()))
}

/// Mirrors the executor's side refinement so the simulated pick succeeds.
fn refine_side(env: &mut SimEnv, object: &str) {
    let Ok(id) = env.locate_visible(object) else { return };
    let Some((site, side)) = env.scene.faced_site().map(|(s, side)| (s.name.clone(), side)) else { return };
    let Some(Location::At { side: obj_side, .. }) = env.scene.object(id).map(|o| o.location.clone()) else { return };
    if obj_side != side {
        let _ = env.exec_navigate(&NavTarget::Site { name: site, side: Some(obj_side) });
    }
}
