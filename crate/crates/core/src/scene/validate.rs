use std::collections::HashSet;

use serde::Serialize;

use super::{Location, ObjectId, SceneMap, Side};
use crate::sim::path::distance_field;

/// One broken scene invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum Violation {
    DuplicateSite { site: String },
    EmptyFootprint { site: String },
    FootprintOutOfBounds { site: String },
    ApproachBlocked { site: String, side: Side },
    UnknownSite { site: String },
    DuplicateObjectId { id: ObjectId },
    MultipleHeld,
    HeldMismatch,
    RobotBlocked,
    NegativeOdometer,
    SiteUnreachable { site: String, side: Side },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::DuplicateSite { .. } => "duplicate_site",
            Violation::EmptyFootprint { .. } => "empty_footprint",
            Violation::FootprintOutOfBounds { .. } => "footprint_out_of_bounds",
            Violation::ApproachBlocked { .. } => "approach_blocked",
            Violation::UnknownSite { .. } => "unknown_site",
            Violation::DuplicateObjectId { .. } => "duplicate_object_id",
            Violation::MultipleHeld => "multiple_held",
            Violation::HeldMismatch => "held_mismatch",
            Violation::RobotBlocked => "robot_blocked",
            Violation::NegativeOdometer => "negative_odometer",
            Violation::SiteUnreachable { .. } => "site_unreachable",
        }
    }
}

/// Every structural invariant plus reachability of every approach point
/// from the robot.
pub fn validate_scene(scene: &SceneMap) -> Vec<Violation> {
    let mut out = validate_structure(scene);
    if !scene.grid.is_free(scene.robot.cell) {
        return out;
    }
    let dist = distance_field(&scene.grid, scene.robot.cell);
    for site in &scene.sites {
        for (side, ap) in &site.approach_points {
            let reachable = scene
                .grid
                .index(ap.cell)
                .map_or(false, |i| dist[i].is_some());
            if !reachable && scene.grid.is_free(ap.cell) {
                out.push(Violation::SiteUnreachable { site: site.name.clone(), side: *side });
            }
        }
    }
    out
}

/// Type invariants only; perturbations may legitimately cut sites off.
pub fn validate_structure(scene: &SceneMap) -> Vec<Violation> {
    let mut out = Vec::new();
    let grid = &scene.grid;

    let mut names = HashSet::new();
    for site in &scene.sites {
        if !names.insert(site.name.as_str()) {
            out.push(Violation::DuplicateSite { site: site.name.clone() });
        }
        if site.footprint.is_empty() {
            out.push(Violation::EmptyFootprint { site: site.name.clone() });
        } else if !site.footprint.cells().all(|c| grid.in_bounds(c)) {
            out.push(Violation::FootprintOutOfBounds { site: site.name.clone() });
        }
        for (side, ap) in &site.approach_points {
            if grid.is_blocked(ap.cell) {
                out.push(Violation::ApproachBlocked { site: site.name.clone(), side: *side });
            }
        }
    }

    let mut ids = HashSet::new();
    let mut held = Vec::new();
    for obj in &scene.objects {
        if !ids.insert(obj.id) {
            out.push(Violation::DuplicateObjectId { id: obj.id });
        }
        match &obj.location {
            Location::Held => held.push(obj.id),
            Location::At { site, .. } => {
                if !scene.sites.iter().any(|s| &s.name == site) {
                    out.push(Violation::UnknownSite { site: site.clone() });
                }
            }
        }
    }
    if held.len() > 1 {
        out.push(Violation::MultipleHeld);
    } else if held.first().copied() != scene.robot.held {
        out.push(Violation::HeldMismatch);
    }

    if grid.is_blocked(scene.robot.cell) {
        out.push(Violation::RobotBlocked);
    }
    if !(scene.robot.odometer >= 0.0) {
        out.push(Violation::NegativeOdometer);
    }
    out
}
