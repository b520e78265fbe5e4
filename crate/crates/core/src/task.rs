//! Structured tasks: goal predicates, the goal checker, scripted
//! perturbations and a keyword interpreter for free-form instructions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::scene::{normalize_label, Cell, Location, ObjectId, ObjectInstance, SceneMap, Side};
use crate::sim::{PerturbEvent, ScheduledPerturbation};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    #[default]
    One,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extreme {
    Smallest,
    Biggest,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

/// One condition on the final scene.
///
/// A move goal names objects by `object` and/or `attrs`, optionally only
/// those that started at `from`, and requires them at `to`. A visit goal
/// only requires the robot to end facing `visit`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goal {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default)]
    pub quantity: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extreme: Option<Extreme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visit: Option<String>,
    /// Intermediate goals are executed but not checked at the end.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub verify: bool,
}

impl Goal {
    pub fn move_object(object: &str, to: &str) -> Self {
        Self { object: Some(normalize_label(object)), to: Some(to.to_string()), verify: true, ..Default::default() }
    }

    pub fn visit(site: &str) -> Self {
        Self { visit: Some(site.to_string()), verify: true, ..Default::default() }
    }

    pub fn is_visit(&self) -> bool {
        self.visit.is_some()
    }

    /// Name and attribute match, ignoring `from` and `extreme`.
    pub fn selects(&self, obj: &ObjectInstance) -> bool {
        self.object.as_deref().map_or(true, |n| obj.name_matches(n))
            && self.attrs.iter().all(|(k, v)| obj.attr(k).is_some_and(|a| a.eq_ignore_ascii_case(v)))
    }

    /// Ids the goal may refer to, judged against the scene at episode start.
    pub fn candidates(&self, initial: &SceneMap) -> Vec<ObjectId> {
        let from = self.from.as_deref().and_then(|f| initial.site(f)).map(|s| s.name.clone());
        let mut found: Vec<&ObjectInstance> = initial
            .objects
            .iter()
            .filter(|o| self.selects(o))
            .filter(|o| match (&from, self.from.as_deref()) {
                (_, None) => true,
                (Some(site), _) => o.location.site() == Some(site.as_str()),
                (None, Some(_)) => false,
            })
            .collect();
        if let Some(extreme) = self.extreme {
            let size = |o: &ObjectInstance| o.attr("size").and_then(|s| s.parse::<i64>().ok()).unwrap_or(0);
            let best = match extreme {
                Extreme::Smallest => found.iter().map(|o| size(o)).min(),
                Extreme::Biggest => found.iter().map(|o| size(o)).max(),
            };
            found.retain(|o| Some(size(o)) == best);
        }
        let mut ids: Vec<ObjectId> = found.into_iter().map(|o| o.id).collect();
        ids.sort();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbAction {
    MoveObject {
        object: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
        to: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        side: Option<Side>,
    },
    RemoveObject {
        object: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
    },
    BlockCells { cells: Vec<Cell> },
}

/// A perturbation as written in a suite file, naming objects by label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub step: u32,
    #[serde(flatten)]
    pub action: PerturbAction,
}

fn find_object(scene: &SceneMap, name: &str, from: Option<&str>) -> Result<ObjectId, ConfigError> {
    let from_site = match from {
        Some(f) => Some(scene.site(f).ok_or_else(|| ConfigError::Invalid(format!("unknown site `{f}`")))?.name.as_str()),
        None => None,
    };
    scene
        .objects
        .iter()
        .filter(|o| o.name_matches(name) && from_site.map_or(true, |s| o.location.site() == Some(s)))
        .map(|o| o.id)
        .min()
        .ok_or_else(|| ConfigError::Invalid(format!("perturbation names missing object `{name}`")))
}

impl PerturbSpec {
    pub fn resolve(&self, scene: &SceneMap) -> Result<ScheduledPerturbation, ConfigError> {
        let event = match &self.action {
            PerturbAction::MoveObject { object, from, to, side } => PerturbEvent::MoveObject {
                object: find_object(scene, object, from.as_deref())?,
                site: to.clone(),
                side: side.unwrap_or(Side::Close),
            },
            PerturbAction::RemoveObject { object, from } => {
                PerturbEvent::RemoveObject { object: find_object(scene, object, from.as_deref())? }
            }
            PerturbAction::BlockCells { cells } => PerturbEvent::BlockCells { cells: cells.clone() },
        };
        Ok(ScheduledPerturbation { step: self.step, event })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub goals: Vec<Goal>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<PerturbSpec>,
    /// Difficulty level, for suites that mix levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
}

impl Task {
    pub fn new(instruction: impl Into<String>, goals: Vec<Goal>) -> Self {
        Self { instruction: instruction.into(), goals, perturbations: Vec::new(), level: None }
    }

    pub fn has_goals(&self) -> bool {
        !self.goals.is_empty()
    }
}

/// Checks verified goals against the final scene. `handled` holds every
/// object the robot picked up during the episode; a goal object counts only
/// if it was actually handled. Distinct goals need distinct objects.
pub fn check_goals(
    goals: &[Goal],
    initial: &SceneMap,
    final_scene: &SceneMap,
    handled: &BTreeSet<ObjectId>,
) -> Result<(), String> {
    let verified: Vec<&Goal> = goals.iter().filter(|g| g.verify).collect();
    let mut options: Vec<Vec<Vec<ObjectId>>> = Vec::with_capacity(verified.len());
    for goal in &verified {
        if let Some(site) = &goal.visit {
            let faced = final_scene.faced_site().map(|(s, _)| s.name.clone());
            let wanted = final_scene.site(site).map(|s| s.name.clone());
            if faced.is_none() || faced != wanted {
                return Err(format!("robot is not at {site}"));
            }
            options.push(vec![Vec::new()]);
            continue;
        }
        let Some(to) = goal.to.as_deref().and_then(|t| final_scene.site(t)).map(|s| s.name.clone()) else {
            return Err(format!("goal destination {:?} is not a site", goal.to));
        };
        let at_to = |id: &ObjectId| {
            final_scene
                .object(*id)
                .is_some_and(|o| matches!(&o.location, Location::At { site, .. } if *site == to))
        };
        let cands = goal.candidates(initial);
        let describe = goal.object.clone().unwrap_or_else(|| format!("{:?}", goal.attrs));
        match goal.quantity {
            Quantity::One => {
                let ok: Vec<Vec<ObjectId>> =
                    cands.iter().filter(|id| at_to(id) && handled.contains(id)).map(|id| vec![*id]).collect();
                if ok.is_empty() {
                    return Err(format!("no {describe} was delivered to {to}"));
                }
                options.push(ok);
            }
            Quantity::All => {
                let present: Vec<ObjectId> = cands.into_iter().filter(|id| final_scene.object(*id).is_some()).collect();
                if present.is_empty() || !present.iter().all(at_to) {
                    return Err(format!("not every {describe} is at {to}"));
                }
                options.push(vec![present]);
            }
        }
    }
    if assign(&options, 0, &mut BTreeSet::new()) {
        Ok(())
    } else {
        Err("goals need more distinct objects than were delivered".into())
    }
}

fn assign(options: &[Vec<Vec<ObjectId>>], i: usize, used: &mut BTreeSet<ObjectId>) -> bool {
    let Some(opts) = options.get(i) else { return true };
    for ids in opts {
        if ids.iter().any(|id| used.contains(id)) {
            continue;
        }
        used.extend(ids.iter().copied());
        if assign(options, i + 1, used) {
            return true;
        }
        for id in ids {
            used.remove(id);
        }
    }
    false
}

/// Table where objects of a category normally live.
pub fn home_site(category: &str) -> Option<&'static str> {
    match category {
        "fruit" => Some("fruit table"),
        "drink" => Some("drink table"),
        "toy" => Some("toy rack"),
        _ => None,
    }
}

const OBJECT_ALIASES: &[(&str, &str)] = &[
    ("toy shark", "shark toy"),
    ("shark", "shark toy"),
    ("squirrel", "squirrel toy"),
    ("ladybug", "ladybug toy"),
    ("duck", "toy duck"),
    ("rabbit", "toy rabbit"),
    ("school bus", "school bus toy"),
    ("fire machine", "fire machine toy"),
    ("pepsi", "pepsi can"),
    ("coke", "coke can"),
    ("cola", "coke can"),
    ("sprite", "sprite can"),
    ("can of sprite", "sprite can"),
    ("fanta", "fanta can"),
    ("fenta", "fanta can"),
    ("feta", "fanta can"),
    ("water", "bottle of water"),
    ("tea", "tea box"),
    ("apples", "apple"),
    ("bananas", "banana"),
    ("lemons", "lemon"),
    ("strawberries", "strawberry"),
];

const COLORS: &[&str] = &["red", "yellow", "green", "blue", "orange", "purple", "brown", "white", "clear"];
const CATEGORIES: &[(&str, &str)] = &[
    ("fruits", "fruit"),
    ("fruit", "fruit"),
    ("drinks", "drink"),
    ("drink", "drink"),
    ("toys", "toy"),
    ("toy", "toy"),
];

/// Finds whole-word occurrences of `needle` in `hay` (both lowercase).
fn word_positions(hay: &str, needle: &str) -> Vec<usize> {
    let bytes = hay.as_bytes();
    hay.match_indices(needle)
        .filter(|(i, _)| {
            let before = *i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
            let end = i + needle.len();
            let after = end >= bytes.len() || !bytes[end].is_ascii_alphanumeric();
            before && after
        })
        .map(|(i, _)| i)
        .collect()
}

/// Mentions of objects in `text`, longest names first, by position.
fn object_mentions(text: &str, scene: &SceneMap) -> Vec<(usize, String)> {
    let mut names: Vec<(String, String)> = scene
        .objects
        .iter()
        .map(|o| (normalize_label(&o.name), normalize_label(&o.name)))
        .chain(OBJECT_ALIASES.iter().map(|(a, n)| (a.to_string(), n.to_string())))
        .collect();
    names.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
    names.dedup();
    let mut taken = vec![false; text.len()];
    let mut out = Vec::new();
    for (surface, canonical) in names {
        if !scene.objects.iter().any(|o| o.name_matches(&canonical)) {
            continue;
        }
        for at in word_positions(text, &surface) {
            if taken[at..at + surface.len()].iter().any(|t| *t) {
                continue;
            }
            taken[at..at + surface.len()].iter_mut().for_each(|t| *t = true);
            out.push((at, canonical.clone()));
        }
    }
    out.sort();
    out
}

fn site_mentions(text: &str, scene: &SceneMap) -> Vec<(usize, usize, String)> {
    let mut labels: Vec<(String, String)> = scene
        .sites
        .iter()
        .flat_map(|s| {
            std::iter::once(&s.name)
                .chain(&s.aliases)
                .chain(s.prompt_label.as_ref())
                .map(move |l| (normalize_label(l), s.name.clone()))
        })
        .collect();
    labels.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
    let mut taken = vec![false; text.len()];
    let mut out = Vec::new();
    for (label, site) in labels {
        for at in word_positions(text, &label) {
            if taken[at..at + label.len()].iter().any(|t| *t) {
                continue;
            }
            taken[at..at + label.len()].iter_mut().for_each(|t| *t = true);
            out.push((at, at + label.len(), site.clone()));
        }
    }
    out.sort();
    out
}

fn split_clauses(text: &str) -> Vec<String> {
    let mut s = format!(" {} ", text.to_lowercase());
    for sep in [", and then ", ", then ", " and then ", " then ", ", and finally, ", ", and finally ", " and finally ", ", finally, ", " finally, ", " finally ", " next, ", " lastly, ", ";"] {
        s = s.replace(sep, " | ");
    }
    s = s.replace(". ", " | ");
    s.split('|')
        .map(|c| c.trim().trim_end_matches('.').trim().to_string())
        .filter(|c| !c.is_empty())
        .collect()
}

/// Keyword interpretation of a free-form instruction into goals.
///
/// Handles "<verb> X [, Y and Z] ... to/on <site>", "move to <site>",
/// "all <color> <category>", "receiving of X" and "its table". Returns an
/// empty list when nothing recognizable is found.
pub fn interpret_instruction(instruction: &str, scene: &SceneMap) -> Vec<Goal> {
    let mut goals = Vec::new();
    let mut last_to: Option<String> = None;
    for clause in split_clauses(instruction) {
        let sites = site_mentions(&clause, scene);
        let objects = object_mentions(&clause, scene);
        let receiving = clause.contains("receiving of");
        let from = if receiving {
            Some("receiving shelf".to_string())
        } else {
            sites
                .iter()
                .find(|(start, _, _)| clause[..*start].trim_end().ends_with("from") || clause[..*start].trim_end().ends_with("from the"))
                .map(|(_, _, s)| s.clone())
        };
        let home = receiving || ["its table", "reasonable place", "corresponding table", "its place"].iter().any(|k| clause.contains(k));
        let mut to = sites
            .iter()
            .filter(|(_, _, s)| Some(s) != from.as_ref())
            .last()
            .map(|(_, _, s)| s.clone());
        if clause.contains("same") && to.is_none() {
            to = last_to.clone();
        }
        if to.is_none() && (clause.contains("ship") || clause.contains("shipment")) {
            to = Some("shipping table".to_string());
        }

        let all = clause.contains("all ") || clause.contains("every ");
        // Attribute words inside site names do not count.
        let mut bare = clause.clone().into_bytes();
        for (start, end, _) in &sites {
            bare[*start..*end].iter_mut().for_each(|b| *b = b' ');
        }
        let bare = String::from_utf8(bare).unwrap_or_default();
        let color = COLORS.iter().find(|c| !word_positions(&bare, c).is_empty());
        let category = CATEGORIES.iter().find(|(w, _)| !word_positions(&bare, w).is_empty()).map(|(_, c)| *c);
        let mut clause_goals = Vec::new();
        for (_, name) in &objects {
            let mut g = Goal::move_object(name, "");
            g.from = from.clone();
            if all || receiving {
                g.quantity = Quantity::All;
            }
            clause_goals.push(g);
        }
        if clause_goals.is_empty() && (color.is_some() || category.is_some()) {
            let mut attrs = BTreeMap::new();
            if let Some(c) = color {
                attrs.insert("color".to_string(), c.to_string());
            }
            if let Some(c) = category {
                attrs.insert("category".to_string(), c.to_string());
            }
            let extreme = if clause.contains("smallest") {
                Some(Extreme::Smallest)
            } else if clause.contains("biggest") || clause.contains("largest") {
                Some(Extreme::Biggest)
            } else {
                None
            };
            clause_goals.push(Goal {
                attrs,
                from: from.clone(),
                quantity: if all || receiving { Quantity::All } else { Quantity::One },
                extreme,
                verify: true,
                ..Default::default()
            });
        }
        if clause_goals.is_empty() {
            if let Some(site) = &to {
                if ["move to", "go to", "navigate to", "return to", "head to"].iter().any(|v| clause.contains(v)) {
                    goals.push(Goal::visit(site));
                }
            }
            continue;
        }
        for mut g in clause_goals {
            let dest = if home {
                let category = g
                    .attrs
                    .get("category")
                    .cloned()
                    .or_else(|| {
                        let name = g.object.as_deref()?;
                        scene.objects.iter().find(|o| o.name_matches(name))?.attr("category").map(str::to_string)
                    });
                category.as_deref().and_then(home_site).map(str::to_string)
            } else {
                to.clone()
            };
            let Some(dest) = dest else { continue };
            g.to = Some(dest);
            goals.push(g);
        }
        if to.is_some() {
            last_to = to;
        }
    }
    // A later goal on the same object supersedes the earlier one.
    let n = goals.len();
    for i in 0..n {
        let later_same = goals[i + 1..]
            .iter()
            .any(|g| g.object.is_some() && g.object == goals[i].object && g.quantity == Quantity::One && goals[i].quantity == Quantity::One && goals[i].attrs == g.attrs);
        let unique = goals[i]
            .object
            .as_deref()
            .is_some_and(|name| scene.objects.iter().filter(|o| o.name_matches(name)).count() == 1);
        if later_same && unique {
            goals[i].verify = false;
        }
    }
    goals
}
