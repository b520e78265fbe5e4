//! World data model for the simulated warehouse.
//!
//! A [`SceneMap`] is a plain value: an occupancy grid, named sites with
//! approach points, an object inventory and the robot. It is serialized as a
//! single JSON document (see `docs/scene-format.md`).

mod canonical;
mod validate;

pub use canonical::{canonical_scene, CANONICAL_GRID_SIZE, CANONICAL_RESOLUTION};
pub use validate::{validate_scene, validate_structure, Violation};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SceneError;

/// A grid cell, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dir: Direction) -> Cell {
        let (dx, dy) = dir.delta();
        Cell::new(self.x + dx, self.y + dy)
    }

    /// Euclidean distance between cell centers, in cells.
    pub fn distance(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

impl From<[i32; 2]> for Cell {
    fn from(v: [i32; 2]) -> Self {
        Cell::new(v[0], v[1])
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Compass direction on the grid; `Up` is +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Right,
    Down,
    Left,
}

impl Direction {
    /// Neighbor expansion order used by path search.
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Right, Direction::Down, Direction::Left];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, 1),
            Direction::Right => (1, 0),
            Direction::Down => (0, -1),
            Direction::Left => (-1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Right => Direction::Left,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
        }
    }

    pub fn rotate_ccw(self) -> Direction {
        match self {
            Direction::Up => Direction::Left,
            Direction::Left => Direction::Down,
            Direction::Down => Direction::Right,
            Direction::Right => Direction::Up,
        }
    }

    pub fn rotate_cw(self) -> Direction {
        self.rotate_ccw().opposite()
    }

    /// Direction of a unit move from `from` to `to`, if they are 4-neighbors.
    pub fn between(from: Cell, to: Cell) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| from.step(*d) == to)
    }
}

/// Side of a site, in the vocabulary the vision model answers with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Far,
    Close,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Far, Side::Close];

    /// Numeric code: 1 left, 2 right, 3 far, 4 close.
    pub fn code(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
            Side::Far => 3,
            Side::Close => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Side> {
        match code {
            1 => Some(Side::Left),
            2 => Some(Side::Right),
            3 => Some(Side::Far),
            4 => Some(Side::Close),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Far => "far",
            Side::Close => "close",
        }
    }

    /// Outward direction of this side for a viewer facing `facing`.
    ///
    /// The close side points back at the viewer, far side away from it.
    pub fn outward(self, facing: Direction) -> Direction {
        match self {
            Side::Close => facing.opposite(),
            Side::Far => facing,
            Side::Left => facing.rotate_ccw(),
            Side::Right => facing.rotate_cw(),
        }
    }

    /// Inverse of [`Side::outward`].
    pub fn from_outward(outward: Direction, facing: Direction) -> Side {
        Side::ALL
            .into_iter()
            .find(|s| s.outward(facing) == outward)
            .expect("every direction maps to a side")
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Occupancy grid; `true` cells are blocked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridMap {
    width: u32,
    height: u32,
    resolution: f64,
    occupancy: Vec<bool>,
}

impl GridMap {
    pub fn new(width: u32, height: u32, resolution: f64) -> Result<Self, SceneError> {
        if width == 0 || height == 0 || !(resolution > 0.0) || !resolution.is_finite() {
            return Err(SceneError::InvalidGrid(format!(
                "width={width} height={height} resolution={resolution}"
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            occupancy: vec![false; width as usize * height as usize],
        })
    }

    pub fn from_occupancy(
        width: u32,
        height: u32,
        resolution: f64,
        occupancy: Vec<bool>,
    ) -> Result<Self, SceneError> {
        let mut grid = Self::new(width, height, resolution)?;
        if occupancy.len() != grid.occupancy.len() {
            return Err(SceneError::InvalidGrid(format!(
                "occupancy has {} entries, expected {}",
                occupancy.len(),
                grid.occupancy.len()
            )));
        }
        grid.occupancy = occupancy;
        Ok(grid)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c)
            .then(|| c.y as usize * self.width as usize + c.x as usize)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let w = self.width as usize;
        Cell::new((index % w) as i32, (index / w) as i32)
    }

    /// Out-of-bounds cells count as blocked.
    pub fn is_blocked(&self, c: Cell) -> bool {
        self.index(c).map_or(true, |i| self.occupancy[i])
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_blocked(c)
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        if let Some(i) = self.index(c) {
            self.occupancy[i] = blocked;
        }
    }

    pub fn fill_rect(&mut self, rect: Rect, blocked: bool) {
        for c in rect.cells() {
            self.set_blocked(c, blocked);
        }
    }

    /// Center of a cell in world meters.
    pub fn cell_center(&self, c: Cell) -> (f64, f64) {
        (
            (f64::from(c.x) + 0.5) * self.resolution,
            (f64::from(c.y) + 0.5) * self.resolution,
        )
    }

    /// Cell containing a world point given in meters.
    pub fn cell_of(&self, x: f64, y: f64) -> Cell {
        Cell::new(
            (x / self.resolution).floor() as i32,
            (y / self.resolution).floor() as i32,
        )
    }
}

/// Serialized grid: rows of `#` (blocked) and `.` (free), top row first.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    width: u32,
    height: u32,
    resolution: f64,
    rows: Vec<String>,
}

impl TryFrom<GridRepr> for GridMap {
    type Error = SceneError;

    fn try_from(r: GridRepr) -> Result<Self, Self::Error> {
        if r.rows.len() != r.height as usize {
            return Err(SceneError::InvalidGrid(format!(
                "expected {} rows, found {}",
                r.height,
                r.rows.len()
            )));
        }
        let mut occupancy = vec![false; r.width as usize * r.height as usize];
        for (i, row) in r.rows.iter().enumerate() {
            let y = r.height as usize - 1 - i;
            let chars: Vec<char> = row.chars().collect();
            if chars.len() != r.width as usize {
                return Err(SceneError::InvalidGrid(format!(
                    "row {i} has {} cells, expected {}",
                    chars.len(),
                    r.width
                )));
            }
            for (x, ch) in chars.into_iter().enumerate() {
                occupancy[y * r.width as usize + x] = match ch {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(SceneError::InvalidGrid(format!(
                            "unexpected cell character {other:?}"
                        )))
                    }
                };
            }
        }
        GridMap::from_occupancy(r.width, r.height, r.resolution, occupancy)
    }
}

impl From<GridMap> for GridRepr {
    fn from(g: GridMap) -> Self {
        let w = g.width as usize;
        let rows = (0..g.height as usize)
            .rev()
            .map(|y| {
                g.occupancy[y * w..(y + 1) * w]
                    .iter()
                    .map(|&b| if b { '#' } else { '.' })
                    .collect()
            })
            .collect();
        GridRepr {
            width: g.width,
            height: g.height,
            resolution: g.resolution,
            rows,
        }
    }
}

/// Axis-aligned rectangle of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x0: i32,
    pub y0: i32,
    pub width: i32,
    pub height: i32,
}

impl Rect {
    pub const fn new(x0: i32, y0: i32, width: i32, height: i32) -> Self {
        Self { x0, y0, width, height }
    }

    pub fn is_empty(&self) -> bool {
        self.width <= 0 || self.height <= 0
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x < self.x0 + self.width && c.y >= self.y0 && c.y < self.y0 + self.height
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let r = *self;
        (r.y0..r.y0 + r.height.max(0))
            .flat_map(move |y| (r.x0..r.x0 + r.width.max(0)).map(move |x| Cell::new(x, y)))
    }

    pub fn center(&self) -> Cell {
        Cell::new(self.x0 + self.width / 2, self.y0 + self.height / 2)
    }

    /// Middle cell of the edge whose outward normal is `dir`.
    pub fn edge_cell(&self, dir: Direction) -> Cell {
        let cx = self.x0 + self.width / 2;
        let cy = self.y0 + self.height / 2;
        match dir {
            Direction::Up => Cell::new(cx, self.y0 + self.height - 1),
            Direction::Down => Cell::new(cx, self.y0),
            Direction::Left => Cell::new(self.x0, cy),
            Direction::Right => Cell::new(self.x0 + self.width - 1, cy),
        }
    }

    /// Edge midpoint in doubled coordinates (cell corners are even).
    fn edge_midpoint2(&self, dir: Direction) -> (i64, i64) {
        let (x0, y0) = (2 * i64::from(self.x0), 2 * i64::from(self.y0));
        let (w, h) = (i64::from(self.width), i64::from(self.height));
        match dir {
            Direction::Up => (x0 + w, y0 + 2 * h),
            Direction::Down => (x0 + w, y0),
            Direction::Left => (x0, y0 + h),
            Direction::Right => (x0 + 2 * w, y0 + h),
        }
    }
}

/// Which side of `footprint` a cell lies on, for a viewer facing `facing`.
///
/// Picks the side whose edge midpoint is nearest the cell center; ties go
/// to the lowest side code.
pub fn side_relative_to(footprint: &Rect, facing: Direction, cell: Cell) -> Side {
    let (px, py) = (2 * i64::from(cell.x) + 1, 2 * i64::from(cell.y) + 1);
    let mut best = (i64::MAX, Side::Left);
    for side in Side::ALL {
        let (mx, my) = footprint.edge_midpoint2(side.outward(facing));
        let d = (mx - px).pow(2) + (my - py).pow(2);
        if d < best.0 {
            best = (d, side);
        }
    }
    best.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKind {
    Table,
    Shelf,
    Rack,
    Entry,
}

/// A free cell next to a site and the heading that faces the site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproachPoint {
    pub cell: Cell,
    pub facing: Direction,
}

/// A named location of the semantic map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Site {
    pub name: String,
    pub kind: SiteKind,
    pub footprint: Rect,
    /// Direction the close side faces, away from the site center.
    pub front: Direction,
    pub approach_points: BTreeMap<Side, ApproachPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    /// Label used on the planner map line, when different from `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_label: Option<String>,
}

impl Site {
    /// Builds a site whose four approach points sit one cell outside each
    /// edge midpoint.
    pub fn with_standard_approaches(
        name: impl Into<String>,
        kind: SiteKind,
        footprint: Rect,
        front: Direction,
    ) -> Self {
        let viewer = front.opposite();
        let approach_points = Side::ALL
            .into_iter()
            .map(|side| {
                let out = side.outward(viewer);
                let cell = footprint.edge_cell(out).step(out);
                (side, ApproachPoint { cell, facing: out.opposite() })
            })
            .collect();
        Self {
            name: name.into(),
            kind,
            footprint,
            front,
            approach_points,
            aliases: Vec::new(),
            prompt_label: None,
        }
    }

    /// Cell on the site surface where objects on `side` rest.
    pub fn object_cell(&self, side: Side) -> Cell {
        self.footprint.edge_cell(side.outward(self.front.opposite()))
    }

    pub fn label(&self) -> &str {
        self.prompt_label.as_deref().unwrap_or(&self.name)
    }

    /// Center cell, used as the long-term memory anchor.
    pub fn anchor(&self) -> Cell {
        self.footprint.center()
    }

    pub fn matches(&self, label: &str) -> bool {
        let wanted = normalize_label(label);
        normalize_label(&self.name) == wanted
            || self.aliases.iter().any(|a| normalize_label(a) == wanted)
    }
}

/// Lowercases, maps `_` to space, collapses whitespace and drops a leading
/// article.
pub fn normalize_label(s: &str) -> String {
    let lowered = s.trim().to_lowercase().replace('_', " ");
    let words: Vec<&str> = lowered.split_whitespace().collect();
    let words = match words.first() {
        Some(&"the") | Some(&"a") | Some(&"an") if words.len() > 1 => &words[1..],
        _ => &words[..],
    };
    words.join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Where an object is: on a site side, or in the gripper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Held,
    At { site: String, side: Side },
}

impl Location {
    pub fn at(site: impl Into<String>, side: Side) -> Self {
        Location::At { site: site.into(), side }
    }

    pub fn site(&self) -> Option<&str> {
        match self {
            Location::Held => None,
            Location::At { site, .. } => Some(site),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectInstance {
    pub id: ObjectId,
    pub name: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    pub location: Location,
}

impl ObjectInstance {
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }

    pub fn name_matches(&self, name: &str) -> bool {
        normalize_label(&self.name) == normalize_label(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotState {
    pub cell: Cell,
    pub facing: Direction,
    #[serde(default)]
    pub held: Option<ObjectId>,
    #[serde(default)]
    pub odometer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneMap {
    pub grid: GridMap,
    pub sites: Vec<Site>,
    pub objects: Vec<ObjectInstance>,
    pub robot: RobotState,
}

impl SceneMap {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        serde_json::from_str(text).map_err(|e| SceneError::Decode(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// Finds a site by name or alias (case, underscores and articles ignored).
    pub fn site(&self, label: &str) -> Option<&Site> {
        self.sites.iter().find(|s| s.matches(label))
    }

    pub fn site_index(&self, label: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.matches(label))
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_mut(&mut self, id: ObjectId) -> Option<&mut ObjectInstance> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    /// Objects resting at a site, ordered by id.
    pub fn objects_at(&self, site: &str) -> Vec<&ObjectInstance> {
        let mut found: Vec<&ObjectInstance> = self
            .objects
            .iter()
            .filter(|o| matches!(&o.location, Location::At { site: s, .. } if s == site))
            .collect();
        found.sort_by_key(|o| o.id);
        found
    }

    pub fn held_object(&self) -> Option<&ObjectInstance> {
        self.robot.held.and_then(|id| self.object(id))
    }

    /// The site and side whose approach point matches the robot pose.
    pub fn faced_site(&self) -> Option<(&Site, Side)> {
        self.sites.iter().find_map(|site| {
            site.approach_points
                .iter()
                .find(|(_, ap)| ap.cell == self.robot.cell && ap.facing == self.robot.facing)
                .map(|(side, _)| (site, *side))
        })
    }

    /// The object's resting cell on its site, if it is not held.
    pub fn object_cell(&self, obj: &ObjectInstance) -> Option<Cell> {
        match &obj.location {
            Location::Held => None,
            Location::At { site, side } => self.site(site).map(|s| s.object_cell(*side)),
        }
    }

    pub fn next_object_id(&self) -> ObjectId {
        ObjectId(self.objects.iter().map(|o| o.id.0 + 1).max().unwrap_or(0))
    }
}

/// Canonical site names and the other spellings that refer to them.
pub const SITE_ALIASES: &[(&str, &[&str])] = &[
    ("shipping table", &["shipping shelf", "shipping"]),
    ("toy rack", &["toy table", "toys table", "table with the toys", "table of toys"]),
    ("drink table", &["drinks table", "table of drinks"]),
    ("fruit table", &["fruits table", "table of fruit"]),
    ("user entry", &["user entry point", "entry", "entrance"]),
    ("receiving shelf", &["receiving table"]),
    ("purchase table", &["purchasing table"]),
    ("storage rack", &["storage shelf"]),
];
