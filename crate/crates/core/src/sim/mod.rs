//! Deterministic warehouse simulator.

pub mod path;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::SimError;
use crate::scene::{side_relative_to, Cell, Direction, Location, ObjectId, SceneMap, Side};
use crate::skills::SkillOutcome;
use path::{distance_field, shortest_path};

pub const DEFAULT_ARM_RANGE: f64 = 0.6;

pub const DETAIL_NAV_INTERRUPTED: &str = "navigation interrupted";
pub const DETAIL_UNREACHABLE: &str = "target unreachable";
pub const DETAIL_GRASP_FAILED: &str = "grasp failed";
pub const DETAIL_OUT_OF_RANGE: &str = "out of arm range";
pub const DETAIL_NOT_FOUND: &str = "target not found";
pub const DETAIL_NOT_FACING: &str = "not facing a table";

/// Failures injected by the fault model; worth retrying as-is.
pub fn is_transient(detail: &str) -> bool {
    detail == DETAIL_NAV_INTERRUPTED || detail == DETAIL_GRASP_FAILED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbEvent {
    MoveObject { object: ObjectId, site: String, side: Side },
    RemoveObject { object: ObjectId },
    BlockCells { cells: Vec<Cell> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPerturbation {
    /// Applied before the skill of this episode step (0-based) runs.
    pub step: u32,
    pub event: PerturbEvent,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FaultModel {
    #[serde(default)]
    pub misrecognition_prob: f64,
    #[serde(default)]
    pub grasp_fail_prob: f64,
    #[serde(default)]
    pub nav_fail_prob: f64,
    #[serde(default)]
    pub scripted_perturbations: Vec<ScheduledPerturbation>,
}

impl FaultModel {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, p) in [
            ("misrecognition_prob", self.misrecognition_prob),
            ("grasp_fail_prob", self.grasp_fail_prob),
            ("nav_fail_prob", self.nav_fail_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidPerturbation(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: u64,
    pub kind: String,
    pub payload: Value,
}

/// Where a navigate call should go.
#[derive(Debug, Clone, PartialEq)]
pub enum NavTarget {
    Site { name: String, side: Option<Side> },
    Coords { x: f64, y: f64 },
}

/// One object as seen from the robot's pose.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observed {
    pub id: ObjectId,
    pub name: String,
    pub attributes: BTreeMap<String, String>,
    /// Relative to the robot's current heading.
    pub side: Side,
}

#[derive(Debug, Clone)]
pub struct SimEnv {
    pub scene: SceneMap,
    pub rng_seed: u64,
    pub arm_range: f64,
    pub fault_model: FaultModel,
    event_log: Vec<SimEvent>,
    rng: ChaCha8Rng,
}

impl SimEnv {
    pub fn new(scene: SceneMap, seed: u64, fault_model: FaultModel) -> Result<Self, SimError> {
        fault_model.validate()?;
        Ok(Self {
            scene,
            rng_seed: seed,
            arm_range: DEFAULT_ARM_RANGE,
            fault_model,
            event_log: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn event_log(&self) -> &[SimEvent] {
        &self.event_log
    }

    /// Event log as one JSON object per line.
    pub fn event_log_jsonl(&self) -> String {
        self.event_log
            .iter()
            .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
            .collect()
    }

    fn log(&mut self, kind: &str, payload: Value) {
        let t = self.event_log.len() as u64;
        self.event_log.push(SimEvent { t, kind: kind.to_string(), payload });
    }

    fn roll(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.gen_bool(p.min(1.0))
    }

    /// Resolves a navigation target to a goal cell and final heading.
    pub fn resolve_target(&self, target: &NavTarget) -> Result<(Cell, Option<Direction>), SimError> {
        match target {
            NavTarget::Site { name, side } => {
                let site = self.scene.site(name).ok_or_else(|| SimError::UnknownSite(name.clone()))?;
                let ap = match side {
                    Some(side) => *site.approach_points.get(side).ok_or(SimError::Unreachable)?,
                    None => {
                        let dist = distance_field(&self.scene.grid, self.scene.robot.cell);
                        site.approach_points
                            .values()
                            .filter_map(|ap| {
                                let d = self.scene.grid.index(ap.cell).and_then(|i| dist[i])?;
                                Some((d, *ap))
                            })
                            .min_by_key(|(d, _)| *d)
                            .map(|(_, ap)| ap)
                            .ok_or(SimError::Unreachable)?
                    }
                };
                Ok((ap.cell, Some(ap.facing)))
            }
            NavTarget::Coords { x, y } => {
                let cell = self.scene.grid.cell_of(*x, *y);
                let facing = self
                    .scene
                    .sites
                    .iter()
                    .flat_map(|s| s.approach_points.values())
                    .find(|ap| ap.cell == cell)
                    .map(|ap| ap.facing);
                Ok((cell, facing))
            }
        }
    }

    pub fn exec_navigate(&mut self, target: &NavTarget) -> Result<SkillOutcome, SimError> {
        let (goal, facing) = self.resolve_target(target)?;
        let path = shortest_path(&self.scene.grid, self.scene.robot.cell, goal)?;
        let interrupted = path.steps() > 1 && self.roll(self.fault_model.nav_fail_prob);
        let stop = if interrupted { path.steps() / 2 } else { path.steps() };
        let traveled = stop as f64 * self.scene.grid.resolution();
        let robot = &mut self.scene.robot;
        robot.cell = path.cells[stop];
        robot.odometer += traveled;
        if stop > 0 {
            if let Some(dir) = Direction::between(path.cells[stop - 1], path.cells[stop]) {
                robot.facing = dir;
            }
        }
        if !interrupted {
            if let Some(f) = facing {
                robot.facing = f;
            }
        }
        let cell = robot.cell;
        self.log(
            "navigate",
            json!({"to": goal, "reached": cell, "traveled": traveled, "interrupted": interrupted}),
        );
        if interrupted {
            return Ok(SkillOutcome::failure(DETAIL_NAV_INTERRUPTED).with_traveled(traveled));
        }
        let observation = match self.observe() {
            Ok(seen) => seen.into_iter().map(|o| o.name).collect(),
            Err(_) => Vec::new(),
        };
        Ok(SkillOutcome::navigated(traveled, observation))
    }

    /// Ground-truth listing of the faced site, ordered by id.
    pub fn observe(&self) -> Result<Vec<Observed>, SimError> {
        let (site, _) = self.scene.faced_site().ok_or(SimError::NotFacingSite)?;
        let facing = self.scene.robot.facing;
        Ok(self
            .scene
            .objects_at(&site.name)
            .into_iter()
            .map(|o| Observed {
                id: o.id,
                name: o.name.clone(),
                attributes: o.attributes.clone(),
                side: side_relative_to(&site.footprint, facing, self.scene.object_cell(o).expect("object at site")),
            })
            .collect())
    }

    /// Objects at the faced site named `name`, nearest to the robot first.
    fn candidates(&self, name: &str) -> Result<Vec<(ObjectId, f64)>, SimError> {
        let (site, _) = self.scene.faced_site().ok_or(SimError::NotFacingSite)?;
        let res = self.scene.grid.resolution();
        let robot = self.scene.robot.cell;
        let mut found: Vec<(ObjectId, f64)> = self
            .scene
            .objects_at(&site.name)
            .into_iter()
            .filter(|o| o.name_matches(name))
            .map(|o| (o.id, robot.distance(self.scene.object_cell(o).expect("object at site")) * res))
            .collect();
        found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(found)
    }

    /// The object a pick of `name` would aim at: the nearest match at the
    /// faced site.
    pub fn locate_visible(&self, name: &str) -> Result<ObjectId, SimError> {
        let cands = self.candidates(name).map_err(|_| SimError::ObjectNotVisible(name.to_string()))?;
        cands.first().map(|(id, _)| *id).ok_or_else(|| SimError::ObjectNotVisible(name.to_string()))
    }

    /// Side code of the named object relative to the robot's pose.
    pub fn table_side(&self, name: &str) -> Result<Side, SimError> {
        let id = self.locate_visible(name)?;
        self.observe()?
            .into_iter()
            .find(|o| o.id == id)
            .map(|o| o.side)
            .ok_or_else(|| SimError::ObjectNotVisible(name.to_string()))
    }

    pub fn exec_pick(&mut self, name: &str, descriptor_hint: Option<&str>) -> Result<SkillOutcome, SimError> {
        if self.scene.robot.held.is_some() {
            return Err(SimError::PreconditionBypassed("pick while holding".into()));
        }
        let cands = match self.candidates(name) {
            Ok(c) => c,
            Err(_) => {
                self.log("pick", json!({"target": name, "result": DETAIL_NOT_FACING}));
                return Ok(SkillOutcome::failure(DETAIL_NOT_FACING));
            }
        };
        let reachable: Vec<ObjectId> = cands
            .iter()
            .filter(|(_, d)| *d <= self.arm_range + 1e-9)
            .map(|(id, _)| *id)
            .collect();
        let detail = if cands.is_empty() {
            Some(DETAIL_NOT_FOUND)
        } else if reachable.is_empty() {
            Some(DETAIL_OUT_OF_RANGE)
        } else {
            None
        };
        if let Some(detail) = detail {
            self.log("pick", json!({"target": name, "result": detail}));
            return Ok(SkillOutcome::failure(detail));
        }
        let mut chosen = reachable[0];
        if let Some(hint) = descriptor_hint {
            let hint = hint.to_lowercase();
            let score = |id: ObjectId| {
                let o = self.scene.object(id).expect("candidate exists");
                ["color", "shape"]
                    .iter()
                    .filter(|k| o.attr(k).is_some_and(|v| hint.contains(&v.to_lowercase())))
                    .count()
            };
            if let Some(best) = reachable.iter().copied().max_by_key(|id| (score(*id), std::cmp::Reverse(*id))) {
                chosen = best;
            }
        }
        if self.roll(self.fault_model.grasp_fail_prob) {
            self.log("pick", json!({"target": name, "result": DETAIL_GRASP_FAILED}));
            return Ok(SkillOutcome::failure(DETAIL_GRASP_FAILED));
        }
        if self.roll(self.fault_model.misrecognition_prob) {
            let site = self.scene.faced_site().expect("facing checked").0.name.clone();
            let others: Vec<ObjectId> = self
                .scene
                .objects_at(&site)
                .into_iter()
                .map(|o| o.id)
                .filter(|id| *id != chosen)
                .collect();
            if let Some(wrong) = others.choose(&mut self.rng) {
                chosen = *wrong;
            }
        }
        self.scene.object_mut(chosen).expect("candidate exists").location = Location::Held;
        self.scene.robot.held = Some(chosen);
        self.log("pick", json!({"target": name, "result": "ok", "object": chosen}));
        Ok(SkillOutcome::success())
    }

    pub fn exec_place(&mut self) -> Result<SkillOutcome, SimError> {
        let held = self
            .scene
            .robot
            .held
            .ok_or_else(|| SimError::PreconditionBypassed("place with empty gripper".into()))?;
        let Some((site, side)) = self.scene.faced_site().map(|(s, side)| (s.name.clone(), side)) else {
            self.log("place", json!({"result": DETAIL_NOT_FACING}));
            return Ok(SkillOutcome::failure(DETAIL_NOT_FACING));
        };
        self.scene.object_mut(held).expect("held object exists").location = Location::at(site.clone(), side);
        self.scene.robot.held = None;
        self.log("place", json!({"result": "ok", "object": held, "site": site, "side": side}));
        Ok(SkillOutcome::success())
    }

    pub fn perturb(&mut self, event: &PerturbEvent) -> Result<(), SimError> {
        match event {
            PerturbEvent::MoveObject { object, site, side } => {
                let name = self.scene.site(site).ok_or_else(|| SimError::UnknownSite(site.clone()))?.name.clone();
                let obj = self.free_object_mut(*object)?;
                obj.location = Location::at(name, *side);
            }
            PerturbEvent::RemoveObject { object } => {
                self.free_object_mut(*object)?;
                self.scene.objects.retain(|o| o.id != *object);
            }
            PerturbEvent::BlockCells { cells } => {
                let approach: Vec<Cell> = self
                    .scene
                    .sites
                    .iter()
                    .flat_map(|s| s.approach_points.values().map(|ap| ap.cell))
                    .collect();
                for c in cells {
                    if !self.scene.grid.in_bounds(*c) || *c == self.scene.robot.cell || approach.contains(c) {
                        return Err(SimError::InvalidPerturbation(format!("cannot block cell {c}")));
                    }
                }
                for c in cells {
                    self.scene.grid.set_blocked(*c, true);
                }
            }
        }
        self.log("perturb", serde_json::to_value(event).expect("event serializes"));
        Ok(())
    }

    fn free_object_mut(&mut self, id: ObjectId) -> Result<&mut crate::scene::ObjectInstance, SimError> {
        match self.scene.object_mut(id) {
            Some(o) if o.location != Location::Held => Ok(o),
            _ => Err(SimError::UnknownObject(id)),
        }
    }
}
