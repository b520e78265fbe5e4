//! The built-in warehouse.
//!
//! Layout (64 x 64 cells at 0.1 m): a row of four tables along the north
//! wall and three along the south wall, an open aisle between them, and the
//! user entry on the west wall. Partitions close the gaps between tables on
//! the aisle side, so the side and far approaches are only reachable through
//! the back corridors that open at the east end.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    Cell, Direction, GridMap, Location, ObjectId, ObjectInstance, Rect, RobotState, SceneMap,
    Side, Site, SiteKind, SITE_ALIASES,
};

pub const CANONICAL_GRID_SIZE: u32 = 64;
pub const CANONICAL_RESOLUTION: f64 = 0.1;

const TABLE_WIDTH: i32 = 10;
const TABLE_DEPTH: i32 = 12;
const NORTH_Y0: i32 = 44;
const SOUTH_Y0: i32 = 8;
const EAST_OPENING_X: i32 = 55;

/// (site, kind, x0, north row?)
const LAYOUT: &[(&str, SiteKind, i32, bool)] = &[
    ("fruit table", SiteKind::Table, 3, true),
    ("shipping table", SiteKind::Table, 3, false),
    ("toy rack", SiteKind::Rack, 31, true),
    ("drink table", SiteKind::Table, 17, true),
    ("receiving shelf", SiteKind::Shelf, 17, false),
    ("purchase table", SiteKind::Table, 45, true),
    ("storage rack", SiteKind::Rack, 31, false),
];

type Attrs = &'static [(&'static str, &'static str)];

const APPLE: Attrs = &[
    ("category", "fruit"), ("color", "red"), ("shape", "round"), ("size", "4"),
    ("edible", "yes"), ("vitamin_c", "medium"),
];
const BANANA: Attrs = &[
    ("category", "fruit"), ("color", "yellow"), ("shape", "long"), ("size", "5"),
    ("edible", "yes"), ("vitamin_c", "low"),
];
const LEMON: Attrs = &[
    ("category", "fruit"), ("color", "yellow"), ("shape", "oval"), ("size", "3"),
    ("edible", "yes"), ("vitamin_c", "high"),
];
const PLUM: Attrs = &[
    ("category", "fruit"), ("color", "purple"), ("shape", "round"), ("size", "2"),
    ("edible", "yes"), ("vitamin_c", "low"),
];
const STRAWBERRY: Attrs = &[
    ("category", "fruit"), ("color", "red"), ("shape", "heart"), ("size", "1"),
    ("edible", "yes"), ("vitamin_c", "high"),
];
const PERSIMMON: Attrs = &[
    ("category", "fruit"), ("color", "orange"), ("shape", "round"), ("size", "4"),
    ("edible", "yes"), ("vitamin_c", "medium"),
];
const WATER: Attrs = &[
    ("category", "drink"), ("color", "clear"), ("shape", "bottle"), ("size", "3"),
    ("caffeinated", "no"),
];
const PEPSI: Attrs = &[
    ("category", "drink"), ("color", "blue"), ("shape", "cylinder"), ("size", "2"),
    ("caffeinated", "yes"),
];
const COKE: Attrs = &[
    ("category", "drink"), ("color", "red"), ("shape", "cylinder"), ("size", "2"),
    ("caffeinated", "yes"),
];
const SPRITE: Attrs = &[
    ("category", "drink"), ("color", "green"), ("shape", "cylinder"), ("size", "2"),
    ("caffeinated", "no"),
];
const FANTA: Attrs = &[
    ("category", "drink"), ("color", "orange"), ("shape", "cylinder"), ("size", "2"),
    ("caffeinated", "no"),
];
const TEA_BOX: Attrs = &[
    ("category", "drink"), ("color", "green"), ("shape", "box"), ("size", "3"),
    ("caffeinated", "yes"),
];
const BEER: Attrs = &[
    ("category", "drink"), ("color", "brown"), ("shape", "bottle"), ("size", "3"),
    ("caffeinated", "no"),
];
const SQUIRREL: Attrs = &[("category", "toy"), ("color", "brown"), ("shape", "squirrel"), ("size", "2")];
const SHARK: Attrs = &[("category", "toy"), ("color", "blue"), ("shape", "shark"), ("size", "3")];
const BUS: Attrs = &[("category", "toy"), ("color", "yellow"), ("shape", "bus"), ("size", "5")];
const FIRE_TRUCK: Attrs = &[("category", "toy"), ("color", "red"), ("shape", "truck"), ("size", "4")];
const LADYBUG: Attrs = &[("category", "toy"), ("color", "red"), ("shape", "ladybug"), ("size", "1")];
const DUCK: Attrs = &[("category", "toy"), ("color", "yellow"), ("shape", "duck"), ("size", "2")];
const RABBIT: Attrs = &[("category", "toy"), ("color", "white"), ("shape", "rabbit"), ("size", "2")];

/// Inventory per site, all resting on the close side.
const INVENTORY: &[(&str, &[(&str, Attrs)])] = &[
    (
        "fruit table",
        &[
            ("apple", APPLE),
            ("banana", BANANA),
            ("lemon", LEMON),
            ("plum", PLUM),
            ("strawberry", STRAWBERRY),
            ("persimmon", PERSIMMON),
        ],
    ),
    (
        "drink table",
        &[
            ("bottle of water", WATER),
            ("pepsi can", PEPSI),
            ("coke can", COKE),
            ("sprite can", SPRITE),
            ("fanta can", FANTA),
            ("tea box", TEA_BOX),
        ],
    ),
    (
        "toy rack",
        &[
            ("squirrel toy", SQUIRREL),
            ("shark toy", SHARK),
            ("school bus toy", BUS),
            ("fire machine toy", FIRE_TRUCK),
            ("ladybug toy", LADYBUG),
            ("toy duck", DUCK),
            ("toy rabbit", RABBIT),
            ("squirrel toy", SQUIRREL),
        ],
    ),
    (
        "purchase table",
        &[
            ("apple", APPLE),
            ("coke can", COKE),
            ("beer", BEER),
            ("fanta can", FANTA),
            ("ladybug toy", LADYBUG),
            ("shark toy", SHARK),
            ("lemon", LEMON),
        ],
    ),
    (
        "receiving shelf",
        &[
            ("apple", APPLE),
            ("banana", BANANA),
            ("shark toy", SHARK),
            ("coke can", COKE),
        ],
    ),
];

/// Builds the built-in warehouse. `seed` only jitters the robot's start
/// cell near the entry.
pub fn canonical_scene(seed: u64) -> SceneMap {
    let size = CANONICAL_GRID_SIZE as i32;
    let mut grid =
        GridMap::new(CANONICAL_GRID_SIZE, CANONICAL_GRID_SIZE, CANONICAL_RESOLUTION).expect("valid grid");

    // Outer walls.
    for i in 0..size {
        for c in [Cell::new(i, 0), Cell::new(i, size - 1), Cell::new(0, i), Cell::new(size - 1, i)] {
            grid.set_blocked(c, true);
        }
    }

    let mut sites = Vec::new();
    for &(name, kind, x0, north) in LAYOUT {
        let (y0, front) = if north {
            (NORTH_Y0, Direction::Down)
        } else {
            (SOUTH_Y0, Direction::Up)
        };
        let footprint = Rect::new(x0, y0, TABLE_WIDTH, TABLE_DEPTH);
        grid.fill_rect(footprint, true);
        let mut site = Site::with_standard_approaches(name, kind, footprint, front);
        site.aliases = aliases_for(name);
        if name == "shipping table" {
            site.prompt_label = Some("shipping shelf".to_string());
        }
        sites.push(site);
    }

    // Aisle-side partitions between tables, leaving the east end open.
    for x in 1..EAST_OPENING_X {
        for y in [NORTH_Y0, SOUTH_Y0 + TABLE_DEPTH - 1] {
            grid.set_blocked(Cell::new(x, y), true);
        }
    }

    // The entry is a doorway in the west wall.
    let mut entry = Site::with_standard_approaches(
        "user entry",
        SiteKind::Entry,
        Rect::new(0, 30, 1, 4),
        Direction::Right,
    );
    entry.approach_points.retain(|side, _| *side == Side::Close);
    entry.aliases = aliases_for("user entry");
    sites.push(entry);

    let mut objects = Vec::new();
    for &(site, items) in INVENTORY {
        for &(name, attrs) in items {
            objects.push(ObjectInstance {
                id: ObjectId(objects.len() as u32),
                name: name.to_string(),
                attributes: attrs
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .collect::<BTreeMap<_, _>>(),
                location: Location::at(site, Side::Close),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Cell::new(2 + rng.gen_range(0..3), 30 + rng.gen_range(0..3));

    SceneMap {
        grid,
        sites,
        objects,
        robot: RobotState {
            cell: start,
            facing: Direction::Right,
            held: None,
            odometer: 0.0,
        },
    }
}

fn aliases_for(name: &str) -> Vec<String> {
    SITE_ALIASES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, a)| a.iter().map(|s| s.to_string()).collect())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn names_at(scene: &SceneMap, site: &str) -> BTreeSet<String> {
        scene.objects_at(site).iter().map(|o| o.name.clone()).collect()
    }

    #[test]
    fn has_every_named_site() {
        let scene = canonical_scene(0);
        for name in [
            "fruit table", "drink table", "toy rack", "shipping table", "receiving shelf",
            "purchase table", "storage rack", "user entry",
        ] {
            assert!(scene.site(name).is_some(), "{name}");
        }
        assert_eq!(scene.site("shipping shelf").unwrap().name, "shipping table");
        assert_eq!(scene.site("Shipping table").unwrap().name, "shipping table");
        assert_eq!(scene.site("toy table").unwrap().name, "toy rack");
    }

    #[test]
    fn fruit_and_toy_inventories() {
        let scene = canonical_scene(3);
        let fruit = names_at(&scene, "fruit table");
        for f in ["apple", "banana", "lemon", "plum", "strawberry"] {
            assert!(fruit.contains(f));
        }
        let toys = names_at(&scene, "toy rack");
        for t in ["squirrel toy", "shark toy", "school bus toy", "fire machine toy"] {
            assert!(toys.contains(t));
        }
        assert!(names_at(&scene, "storage rack").is_empty());
    }

    #[test]
    fn seed_only_moves_the_robot() {
        let a = canonical_scene(1);
        let b = canonical_scene(99);
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.sites, b.sites);
        assert_eq!(a.objects, b.objects);
        assert_eq!(canonical_scene(7), canonical_scene(7));
    }

    #[test]
    fn smallest_fruit_is_unique() {
        let scene = canonical_scene(0);
        let mut sizes: Vec<(u32, &str)> = scene
            .objects
            .iter()
            .filter(|o| o.attr("category") == Some("fruit"))
            .map(|o| (o.attr("size").unwrap().parse().unwrap(), o.name.as_str()))
            .collect();
        sizes.sort();
        assert_eq!(sizes[0].1, "strawberry");
        assert!(sizes[1].0 > sizes[0].0);
    }
}
