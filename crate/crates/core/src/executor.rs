//! The closed loop: prompt, plan, execute one skill, feed the outcome back,
//! read the next action, until the planner says done.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::codec::{
    parse_initial_plan, parse_step_reply, render_feedback, render_initial_prompt, Plan, Skill, SkillCall,
};
use crate::error::{CodecError, GatewayError};
use crate::gateway::{BackendUsage, Planner, PlannerContext, Vlm};
use crate::memory::{memory_hints, LongTermMemory, Position, ShortTermStore};
use crate::scene::{GridMap, Location, ObjectId, SceneMap, Side};
use crate::sim::path::shortest_path;
use crate::sim::{is_transient, FaultModel, NavTarget, ScheduledPerturbation, SimEnv, SimEvent, DETAIL_NOT_FOUND};
use crate::skills::{check_preconditions, dispatch, feedback_for, SkillOutcome};
use crate::task::{check_goals, Task};

/// Reprompts allowed after an unparseable reply.
pub const MAX_REPROMPTS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodePolicy {
    pub max_steps: u32,
    pub max_retries: u32,
    pub feedback: bool,
    pub memory: bool,
    pub side_refinement: bool,
}

impl Default for EpisodePolicy {
    fn default() -> Self {
        Self { max_steps: 40, max_retries: 3, feedback: true, memory: true, side_refinement: true }
    }
}

/// Memory that may outlive one episode.
#[derive(Debug, Clone)]
pub struct Stores {
    pub stm: ShortTermStore,
    pub ltm: LongTermMemory,
}

impl Stores {
    pub fn for_scene(scene: &SceneMap) -> Self {
        Self { stm: ShortTermStore::default(), ltm: LongTermMemory::from_scene(scene) }
    }
}

pub struct Backends<'a> {
    pub planner: &'a mut dyn Planner,
    pub vlm: &'a mut dyn Vlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    StepBudgetExhausted,
    RetryBudget,
    PlannerProtocolError,
    BackendError,
    GoalsUnmet,
    InvalidTask,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Success,
    Failure { reason: FailureReason, detail: String },
}

impl Verdict {
    pub fn is_success(&self) -> bool {
        matches!(self, Verdict::Success)
    }

    pub fn reason(&self) -> Option<FailureReason> {
        match self {
            Verdict::Success => None,
            Verdict::Failure { reason, .. } => Some(*reason),
        }
    }
}

/// One message to the planner and its reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub stimulus: String,
    pub reply: String,
    pub usage: BackendUsage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_request: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VlmKind {
    TableSide,
    Describe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlmCall {
    pub kind: VlmKind,
    pub object: String,
    pub answer: String,
    pub usage: BackendUsage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Side reported by the vision model, relative to the robot.
    pub reported: Side,
    pub moved: bool,
    pub traveled: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<SkillOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub retry: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exchanges: Vec<Exchange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_action: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vlm: Vec<VlmCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<Refinement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<SimEvent>,
}

/// One navigation subgoal: success flag, shortest length, traveled length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplSample {
    pub success: f64,
    pub shortest: f64,
    pub traveled: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub llm_calls: u32,
    pub vlm_side_calls: u32,
    pub vlm_describe_calls: u32,
    /// Includes refinement moves.
    pub navigate_calls: u32,
    pub refinement_navigates: u32,
    pub pick_calls: u32,
    pub place_calls: u32,
    /// Failure messages sent to the planner.
    pub replans: u32,
    pub retries: u32,
    pub reprompts: u32,
}

impl Counters {
    pub fn vlm_calls(&self) -> u32 {
        self.vlm_side_calls + self.vlm_describe_calls
    }
}

/// Final transcript line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub task: Task,
    pub policy: EpisodePolicy,
    pub planner: String,
    pub verdict: Verdict,
    /// Success was judged on the planner's word alone.
    #[serde(default)]
    pub trusted_done: bool,
    /// The initial plan satisfies the goals on the unperturbed scene.
    pub ideal: bool,
    pub steps: u32,
    pub counters: Counters,
    pub samples: Vec<SplSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTranscript {
    pub turns: Vec<Turn>,
    pub summary: EpisodeSummary,
}

impl EpisodeTranscript {
    pub fn is_success(&self) -> bool {
        self.summary.verdict.is_success()
    }

    /// Feedback lines in the order they were produced.
    pub fn feedback_lines(&self) -> Vec<&str> {
        self.turns.iter().filter_map(|t| t.feedback.as_deref()).collect()
    }

    /// Every exchange with the planner, in order.
    pub fn exchanges(&self) -> impl Iterator<Item = &Exchange> {
        self.turns.iter().flat_map(|t| t.exchanges.iter())
    }

    pub fn vlm_calls(&self) -> impl Iterator<Item = &VlmCall> {
        self.turns.iter().flat_map(|t| t.vlm.iter())
    }

    /// One JSON object per turn, then the summary.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for turn in &self.turns {
            out.push_str(&serde_json::to_string(turn).expect("turn serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let (last, rest) = lines.split_last().ok_or_else(|| serde::de::Error::custom("empty transcript"))?;
        let turns = rest.iter().map(|l| serde_json::from_str(l)).collect::<Result<_, _>>()?;
        Ok(Self { turns, summary: serde_json::from_str(last)? })
    }
}

type Abort = (FailureReason, String);

fn backend_abort(e: GatewayError) -> Abort {
    (FailureReason::BackendError, e.to_string())
}

struct OpenSample {
    grid: GridMap,
    start: crate::scene::Cell,
    odometer: f64,
    nav_ok: bool,
    manipulation: Option<bool>,
}

struct Episode<'a, 'b> {
    env: &'a mut SimEnv,
    planner: &'a mut dyn Planner,
    vlm: &'a mut dyn Vlm,
    stores: &'a mut Stores,
    policy: EpisodePolicy,
    task: &'a Task,
    initial: SceneMap,
    perturbations: Vec<ScheduledPerturbation>,
    turns: Vec<Turn>,
    counters: Counters,
    samples: Vec<SplSample>,
    open: Option<OpenSample>,
    handled: BTreeSet<ObjectId>,
    plan: Option<Plan>,
    queue: VecDeque<SkillCall>,
    streak: (Option<SkillCall>, u32),
    refine_ready: bool,
    held_summary: Option<String>,
    step: u32,
    observer: &'a mut (dyn FnMut(&Turn, &SceneMap) + 'b),
}

/// Runs one episode. Failures of any kind end up in the verdict.
pub fn run_episode(
    env: &mut SimEnv,
    backends: Backends<'_>,
    stores: &mut Stores,
    policy: &EpisodePolicy,
    task: &Task,
) -> EpisodeTranscript {
    run_episode_observed(env, backends, stores, policy, task, &mut |_, _| {})
}

/// As [`run_episode`], calling `observer` with the scene after every turn.
pub fn run_episode_observed(
    env: &mut SimEnv,
    backends: Backends<'_>,
    stores: &mut Stores,
    policy: &EpisodePolicy,
    task: &Task,
    observer: &mut dyn FnMut(&Turn, &SceneMap),
) -> EpisodeTranscript {
    let initial = env.scene.clone();
    let mut perturbations = env.fault_model.scripted_perturbations.clone();
    let mut invalid = None;
    for spec in &task.perturbations {
        match spec.resolve(&initial) {
            Ok(p) => perturbations.push(p),
            Err(e) => invalid = Some(e.to_string()),
        }
    }
    let planner_name = backends.planner.name().to_string();
    let mut ep = Episode {
        env,
        planner: backends.planner,
        vlm: backends.vlm,
        stores,
        policy: *policy,
        task,
        initial,
        perturbations,
        turns: Vec::new(),
        counters: Counters::default(),
        samples: Vec::new(),
        open: None,
        handled: BTreeSet::new(),
        plan: None,
        queue: VecDeque::new(),
        streak: (None, 0),
        refine_ready: false,
        held_summary: None,
        step: 0,
        observer,
    };
    let result = match invalid {
        Some(msg) => Err((FailureReason::InvalidTask, msg)),
        None if policy.max_steps == 0 => Err((FailureReason::InvalidTask, "max_steps must be at least 1".into())),
        None => ep.run(),
    };
    ep.close_sample();

    let mut trusted_done = false;
    let verdict = match result {
        Err((reason, detail)) => Verdict::Failure { reason, detail },
        Ok(()) if !task.has_goals() => {
            trusted_done = true;
            Verdict::Success
        }
        Ok(()) => match check_goals(&task.goals, &ep.initial, &ep.env.scene, &ep.handled) {
            Ok(()) => Verdict::Success,
            Err(detail) => Verdict::Failure { reason: FailureReason::GoalsUnmet, detail },
        },
    };
    let ideal = verdict.is_success() || ep.plan.as_ref().is_some_and(|p| plan_is_ideal(p, task, &ep.initial));
    EpisodeTranscript {
        turns: ep.turns,
        summary: EpisodeSummary {
            task: task.clone(),
            policy: *policy,
            planner: planner_name,
            verdict,
            trusted_done,
            ideal,
            steps: ep.step,
            counters: ep.counters,
            samples: ep.samples,
        },
    }
}

/// Replays `plan` blindly on a fault-free copy of `initial` and checks the
/// goals. Without goals a plan counts as ideal when it is non-empty.
pub fn plan_is_ideal(plan: &Plan, task: &Task, initial: &SceneMap) -> bool {
    let mut start = initial.clone();
    start.robot.odometer = 0.0;
    let mut env = SimEnv::new(start, 0, FaultModel::default()).expect("default faults are valid");
    let mut handled = BTreeSet::new();
    let mut after_nav = false;
    for call in plan.flatten() {
        if call.skill == Skill::Done {
            break;
        }
        if check_preconditions(&call, &env.scene).is_err() {
            after_nav = false;
            continue;
        }
        if call.skill == Skill::Pick && after_nav {
            if let Some(object) = call.object() {
                if let Ok(side) = env.table_side(object) {
                    refine_to(&mut env, side);
                }
            }
        }
        let ok = dispatch(&call, &mut env, None).map(|o| o.ok).unwrap_or(false);
        after_nav = call.skill == Skill::Navigate && ok;
        if call.skill == Skill::Pick && ok {
            handled.extend(env.scene.robot.held);
        }
    }
    if !task.has_goals() {
        return !plan.flatten().is_empty();
    }
    check_goals(&task.goals, initial, &env.scene, &handled).is_ok()
}

/// Moves to the approach point on the side the object was reported on,
/// relative to the robot. Returns the distance traveled when a move was
/// needed.
fn refine_to(env: &mut SimEnv, reported: Side) -> Option<f64> {
    if reported == Side::Close {
        return None;
    }
    let (site, front) = env.scene.faced_site().map(|(s, _)| (s.name.clone(), s.front))?;
    let outward = reported.outward(env.scene.robot.facing);
    let table_side = Side::from_outward(outward, front.opposite());
    let before = env.scene.robot.odometer;
    let out = env.exec_navigate(&NavTarget::Site { name: site, side: Some(table_side) }).ok()?;
    out.ok.then(|| env.scene.robot.odometer - before)
}

fn plan_reprompt(err: &CodecError) -> String {
    format!(
        "#error: your reply could not be parsed ({err}). Answer again with one JSON object with the keys \"reasoning\", \"action_list\" and \"first_action\"."
    )
}

fn step_reprompt(err: &CodecError) -> String {
    format!(
        "#error: your reply could not be parsed ({err}). Answer again with one JSON object with the keys \"step_by_step_reasoning\" and \"next_action\"."
    )
}

impl<'a, 'b> Episode<'a, 'b> {
    fn record(&mut self, mut turn: Turn, log_from: usize) {
        turn.events = self.env.event_log()[log_from..].to_vec();
        (self.observer)(&turn, &self.env.scene);
        self.turns.push(turn);
    }

    /// Sends `message` and parses the reply, reprompting on parse errors.
    fn converse<T>(
        &mut self,
        initial: bool,
        message: String,
        parse: fn(&str) -> Result<T, CodecError>,
        reprompt: fn(&CodecError) -> String,
        turn: &mut Turn,
    ) -> Result<T, Abort> {
        let mut message = message;
        let mut first = initial;
        for attempt in 0..=MAX_REPROMPTS {
            self.counters.llm_calls += 1;
            let reply = {
                let ctx = PlannerContext { scene: &self.env.scene, task: Some(self.task) };
                if first {
                    self.planner.initial(&message, &ctx)
                } else {
                    self.planner.step(&message, &ctx)
                }
            }
            .map_err(backend_abort)?;
            first = false;
            turn.exchanges.push(Exchange {
                stimulus: message.clone(),
                reply: reply.text.clone(),
                usage: reply.usage,
                raw_request: reply.raw_request,
                raw_response: reply.raw_response,
            });
            match parse(&reply.text) {
                Ok(v) => return Ok(v),
                Err(e) if attempt < MAX_REPROMPTS => {
                    self.counters.reprompts += 1;
                    message = reprompt(&e);
                }
                Err(e) => return Err((FailureReason::PlannerProtocolError, e.to_string())),
            }
        }
        unreachable!("loop returns on the last attempt")
    }

    fn run(&mut self) -> Result<(), Abort> {
        let hints = if self.policy.memory {
            memory_hints(&self.stores.stm, &self.stores.ltm, &self.task.instruction)
        } else {
            Vec::new()
        };
        let prompt = render_initial_prompt(&self.task.instruction, &self.env.scene, &hints);
        let mut turn = Turn { index: 0, ..Default::default() };
        let log_from = self.env.event_log().len();
        let plan = self.converse(true, prompt, parse_initial_plan, plan_reprompt, &mut turn);
        let plan = match plan {
            Ok(p) => p,
            Err(e) => {
                self.record(turn, log_from);
                return Err(e);
            }
        };
        turn.next_action = Some(plan.first_action.to_string());
        let mut pending = plan.first_action.clone();
        if !self.policy.feedback {
            self.queue = plan.flatten().into();
            pending = self.queue.pop_front().unwrap_or_else(SkillCall::done);
        }
        self.plan = Some(plan);
        self.record(turn, log_from);

        loop {
            let log_from = self.env.event_log().len();
            let mut turn = Turn { index: self.turns.len() as u32, ..Default::default() };
            turn.action = Some(pending.to_string());
            if pending.skill == Skill::Done {
                turn.outcome = Some(SkillOutcome::success());
                self.record(turn, log_from);
                return Ok(());
            }
            if self.step >= self.policy.max_steps {
                return Err((
                    FailureReason::StepBudgetExhausted,
                    format!("no done after {} steps", self.policy.max_steps),
                ));
            }
            self.apply_perturbations();
            let is_retry = self.streak.0.as_ref() == Some(&pending) && self.streak.1 > 0;
            let outcome = match self.execute(&pending, is_retry, &mut turn) {
                Ok(o) => o,
                Err(e) => {
                    self.record(turn, log_from);
                    return Err(e);
                }
            };
            self.step += 1;
            let fb = feedback_for(pending.skill, &outcome).map(|e| render_feedback(&e));
            turn.feedback = fb.clone();
            turn.outcome = Some(outcome.clone());

            if outcome.ok {
                self.streak = (None, 0);
            } else {
                if self.streak.0.as_ref() == Some(&pending) {
                    self.streak.1 += 1;
                } else {
                    self.streak = (Some(pending.clone()), 1);
                }
                if self.streak.1 > self.policy.max_retries {
                    self.record(turn, log_from);
                    return Err((
                        FailureReason::RetryBudget,
                        format!("{pending} failed {} times: {}", self.streak.1, outcome.detail),
                    ));
                }
                if is_transient(&outcome.detail) {
                    self.counters.retries += 1;
                    turn.retry = true;
                    turn.next_action = Some(pending.to_string());
                    self.record(turn, log_from);
                    continue;
                }
            }

            if self.policy.feedback {
                if !outcome.ok {
                    self.counters.replans += 1;
                }
                let message = fb.unwrap_or_default();
                let reply = self.converse(false, message, parse_step_reply, step_reprompt, &mut turn);
                match reply {
                    Ok(r) => pending = r.next_action,
                    Err(e) => {
                        self.record(turn, log_from);
                        return Err(e);
                    }
                }
            } else {
                pending = self.queue.pop_front().unwrap_or_else(SkillCall::done);
            }
            turn.next_action = Some(pending.to_string());
            self.record(turn, log_from);
        }
    }

    fn apply_perturbations(&mut self) {
        let due: Vec<ScheduledPerturbation> =
            self.perturbations.iter().filter(|p| p.step == self.step).cloned().collect();
        for p in due {
            // A perturbation on a held object or a blocked approach is skipped.
            let _ = self.env.perturb(&p.event);
        }
    }

    fn execute(&mut self, call: &SkillCall, is_retry: bool, turn: &mut Turn) -> Result<SkillOutcome, Abort> {
        if let Err(v) = check_preconditions(call, &self.env.scene) {
            match call.skill {
                Skill::Navigate => self.counters.navigate_calls += 1,
                Skill::Pick => self.counters.pick_calls += 1,
                Skill::Place => self.counters.place_calls += 1,
                Skill::Done => {}
            }
            if call.skill == Skill::Navigate && !is_retry {
                self.open_sample();
                if let Some(s) = &mut self.open {
                    s.nav_ok = false;
                }
            } else {
                self.note_manipulation(false);
            }
            self.refine_ready = false;
            return Ok(SkillOutcome::failure(v.detail()));
        }
        match call.skill {
            Skill::Navigate => {
                self.counters.navigate_calls += 1;
                if !is_retry {
                    self.open_sample();
                }
                let out = self.dispatch(call, None);
                if let Some(s) = &mut self.open {
                    s.nav_ok = out.ok;
                }
                self.refine_ready = out.ok;
                Ok(out)
            }
            Skill::Pick => {
                self.counters.pick_calls += 1;
                let object = call.object().unwrap_or_default().to_string();
                if self.policy.side_refinement && std::mem::take(&mut self.refine_ready) {
                    match self.vlm.table_side(&object, self.env) {
                        Err(GatewayError::ObjectNotVisible(_)) => {
                            self.note_manipulation(false);
                            return Ok(SkillOutcome::failure(DETAIL_NOT_FOUND));
                        }
                        Err(e) => return Err(backend_abort(e)),
                        Ok((answer, usage)) => {
                            self.counters.vlm_side_calls += 1;
                            turn.vlm.push(VlmCall {
                                kind: VlmKind::TableSide,
                                object: object.clone(),
                                answer: format!("{} {} {}", answer.side.code(), answer.color, answer.shape),
                                usage,
                            });
                            let moved = answer.side != Side::Close;
                            if moved {
                                self.counters.navigate_calls += 1;
                                self.counters.refinement_navigates += 1;
                            }
                            let traveled = refine_to(self.env, answer.side).unwrap_or(0.0);
                            turn.refinement = Some(Refinement { reported: answer.side, moved, traveled });
                        }
                    }
                }
                self.refine_ready = false;
                let hint = self.descriptor(&object, turn)?;
                let before: BTreeMap<ObjectId, Location> =
                    self.env.scene.objects.iter().map(|o| (o.id, o.location.clone())).collect();
                let out = self.dispatch(call, hint.as_deref());
                if out.ok {
                    if let Some(held) = self.env.scene.held_object() {
                        let (id, name) = (held.id, held.name.clone());
                        self.handled.insert(id);
                        self.held_summary = hint.clone();
                        if self.policy.memory {
                            if let Some(Location::At { site, side }) = before.get(&id) {
                                let summary = hint.unwrap_or_default();
                                let position = Position { site: site.clone(), side: *side };
                                self.stores.stm.upsert(&name, position, &summary, self.step);
                            }
                        }
                    }
                }
                self.note_manipulation(out.ok);
                Ok(out)
            }
            Skill::Place => {
                self.counters.place_calls += 1;
                self.refine_ready = false;
                let held = self.env.scene.robot.held;
                let out = self.dispatch(call, None);
                if out.ok && self.policy.memory {
                    if let Some(obj) = held.and_then(|id| self.env.scene.object(id)) {
                        if let Location::At { site, side } = obj.location.clone() {
                            let name = obj.name.clone();
                            let summary = match self.held_summary.take() {
                                Some(s) => s,
                                None => self.describe(&name, turn)?.unwrap_or_default(),
                            };
                            self.stores.stm.upsert(&name, Position { site, side }, &summary, self.step);
                        }
                    }
                }
                if out.ok {
                    self.held_summary = None;
                }
                self.note_manipulation(out.ok);
                Ok(out)
            }
            Skill::Done => Ok(SkillOutcome::success()),
        }
    }

    fn dispatch(&mut self, call: &SkillCall, hint: Option<&str>) -> SkillOutcome {
        dispatch(call, self.env, hint).unwrap_or_else(|e| SkillOutcome::failure(e.to_string()))
    }

    /// Description used to disambiguate a pick: the stored one when memory
    /// holds a unit for this object at the faced site, else a fresh query.
    fn descriptor(&mut self, object: &str, turn: &mut Turn) -> Result<Option<String>, Abort> {
        if self.policy.memory {
            if let Some((site, _)) = self.env.scene.faced_site() {
                if let Some(unit) = self.stores.stm.fresh_unit(object, &site.name) {
                    return Ok(Some(unit.img_summary.clone()));
                }
            }
        }
        self.describe(object, turn)
    }

    fn describe(&mut self, object: &str, turn: &mut Turn) -> Result<Option<String>, Abort> {
        match self.vlm.describe(object, self.env) {
            Ok((sentence, usage)) => {
                self.counters.vlm_describe_calls += 1;
                turn.vlm.push(VlmCall {
                    kind: VlmKind::Describe,
                    object: object.to_string(),
                    answer: sentence.clone(),
                    usage,
                });
                Ok(Some(sentence))
            }
            Err(GatewayError::ObjectNotVisible(_)) => Ok(None),
            Err(e) => Err(backend_abort(e)),
        }
    }

    fn open_sample(&mut self) {
        self.close_sample();
        self.open = Some(OpenSample {
            grid: self.env.scene.grid.clone(),
            start: self.env.scene.robot.cell,
            odometer: self.env.scene.robot.odometer,
            nav_ok: false,
            manipulation: None,
        });
    }

    fn note_manipulation(&mut self, ok: bool) {
        if let Some(s) = &mut self.open {
            s.manipulation.get_or_insert(ok);
        }
    }

    fn close_sample(&mut self) {
        let Some(s) = self.open.take() else { return };
        let end = self.env.scene.robot.cell;
        let traveled = self.env.scene.robot.odometer - s.odometer;
        let shortest = shortest_path(&s.grid, s.start, end).map(|p| p.length).unwrap_or(traveled).min(traveled);
        let success = s.nav_ok && s.manipulation.unwrap_or(true);
        self.samples.push(SplSample { success: if success { 1.0 } else { 0.0 }, shortest, traveled });
    }
}
