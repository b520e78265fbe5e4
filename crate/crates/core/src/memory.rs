//! Short-term object memory with embedding retrieval, and the long-term
//! grid plus semantic label map.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::MemoryError;
use crate::scene::{normalize_label, Cell, GridMap, SceneMap, Side};

/// Retrieval threshold below which no unit is considered relevant.
pub const RETRIEVAL_THRESHOLD: f64 = 0.25;
/// Cosine scores closer than this are treated as equal.
pub const TIE_EPSILON: f64 = 1e-12;

pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// FNV-1a hashed bag of lowercase alphanumeric tokens, L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedBagOfWords {
    pub dimension: usize,
}

impl Default for HashedBagOfWords {
    fn default() -> Self {
        Self { dimension: 256 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

impl EmbeddingProvider for HashedBagOfWords {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        let mut tokens = tokenize(text);
        if tokens.is_empty() && !text.is_empty() {
            tokens.push(text.to_string());
        }
        for t in &tokens {
            v[(fnv1a(t.as_bytes()) % self.dimension as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Highest-cosine candidate at or above `threshold`; near-ties go to the
/// lowest id.
pub fn argmax_cosine<'a>(
    query: &[f64],
    candidates: impl IntoIterator<Item = (u64, &'a [f64])>,
    threshold: f64,
) -> Option<(u64, f64)> {
    let mut best: Option<(u64, f64)> = None;
    for (id, v) in candidates {
        let s = cosine(query, v);
        best = match best {
            None => Some((id, s)),
            Some((bid, bs)) if s > bs + TIE_EPSILON || ((s - bs).abs() <= TIE_EPSILON && id < bid) => Some((id, s)),
            keep => keep,
        };
    }
    best.filter(|(_, s)| *s >= threshold)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub site: String,
    pub side: Side,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} side)", self.site, self.side)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryUnit {
    pub id: u64,
    pub object: String,
    pub position: Position,
    pub img_summary: String,
    pub created_step: u32,
}

impl MemoryUnit {
    /// Text compared against instructions: `OBJECT at POSITION: IMG`.
    pub fn render(&self) -> String {
        format!("{} at {}: {}", self.object, self.position, self.img_summary)
    }
}

#[derive(Clone)]
pub struct ShortTermStore {
    units: Vec<MemoryUnit>,
    next_id: u64,
    embedder: Arc<dyn EmbeddingProvider>,
}

impl fmt::Debug for ShortTermStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShortTermStore").field("units", &self.units).field("next_id", &self.next_id).finish()
    }
}

impl Default for ShortTermStore {
    fn default() -> Self {
        Self::new(Arc::new(HashedBagOfWords::default()))
    }
}

impl ShortTermStore {
    pub fn new(embedder: Arc<dyn EmbeddingProvider>) -> Self {
        Self { units: Vec::new(), next_id: 0, embedder }
    }

    pub fn units(&self) -> &[MemoryUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn embedder(&self) -> &dyn EmbeddingProvider {
        self.embedder.as_ref()
    }

    /// Replaces any unit for the same object and appends a fresh one.
    pub fn upsert(&mut self, object: &str, position: Position, img_summary: &str, step: u32) -> MemoryUnit {
        let key = normalize_label(object);
        self.units.retain(|u| normalize_label(&u.object) != key);
        let unit = MemoryUnit {
            id: self.next_id,
            object: object.to_string(),
            position,
            img_summary: img_summary.to_string(),
            created_step: step,
        };
        self.next_id += 1;
        self.units.push(unit.clone());
        unit
    }

    pub fn retrieve(&self, instruction: &str) -> Option<&MemoryUnit> {
        self.retrieve_scored(instruction).map(|(u, _)| u)
    }

    pub fn retrieve_scored(&self, instruction: &str) -> Option<(&MemoryUnit, f64)> {
        let query = self.embedder.embed(instruction);
        let vectors: Vec<(u64, Vec<f64>)> =
            self.units.iter().map(|u| (u.id, self.embedder.embed(&u.render()))).collect();
        let (id, score) =
            argmax_cosine(&query, vectors.iter().map(|(id, v)| (*id, v.as_slice())), RETRIEVAL_THRESHOLD)?;
        self.units.iter().find(|u| u.id == id).map(|u| (u, score))
    }

    /// Unit for `object` recorded at `site`, if any.
    pub fn fresh_unit(&self, object: &str, site: &str) -> Option<&MemoryUnit> {
        let key = normalize_label(object);
        self.units
            .iter()
            .find(|u| normalize_label(&u.object) == key && u.position.site == site)
    }

    pub fn unit_for(&self, object: &str) -> Option<&MemoryUnit> {
        let key = normalize_label(object);
        self.units.iter().find(|u| normalize_label(&u.object) == key)
    }

    pub fn dump_jsonl(&self) -> String {
        self.units
            .iter()
            .map(|u| serde_json::to_string(u).expect("unit serializes") + "\n")
            .collect()
    }

    pub fn load_jsonl(text: &str, embedder: Arc<dyn EmbeddingProvider>) -> Result<Self, MemoryError> {
        let mut store = Self::new(embedder);
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let unit: MemoryUnit = serde_json::from_str(line).map_err(|e| MemoryError::Decode(e.to_string()))?;
            store.next_id = store.next_id.max(unit.id + 1);
            store.units.push(unit);
        }
        Ok(store)
    }
}

/// Occupancy grid plus semantic labels pinned to grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTermMemory {
    pub grid: GridMap,
    pub labels: BTreeMap<String, Cell>,
}

impl LongTermMemory {
    /// Labels every site name, alias and map label at its anchor cell.
    pub fn from_scene(scene: &SceneMap) -> Self {
        let mut labels = BTreeMap::new();
        for site in &scene.sites {
            let names = std::iter::once(&site.name).chain(&site.aliases).chain(site.prompt_label.as_ref());
            for name in names {
                labels.entry(normalize_label(name)).or_insert(site.anchor());
            }
        }
        Self { grid: scene.grid.clone(), labels }
    }

    pub fn lookup(&self, label: &str) -> Result<Cell, MemoryError> {
        self.labels
            .get(&normalize_label(label))
            .copied()
            .ok_or_else(|| MemoryError::UnknownLabel(label.to_string()))
    }
}

pub fn hint_line(unit: &MemoryUnit) -> String {
    format!("according to memory, {} was last placed at {}", unit.object, unit.position)
}

/// Prompt lines for the unit most relevant to `instruction`.
pub fn memory_hints(store: &ShortTermStore, ltm: &LongTermMemory, instruction: &str) -> Vec<String> {
    match store.retrieve(instruction) {
        Some(unit) if ltm.lookup(&unit.position.site).is_ok() => vec![hint_line(unit)],
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::canonical_scene;

    fn pos(site: &str) -> Position {
        Position { site: site.into(), side: Side::Close }
    }

    #[test]
    fn upsert_replaces_same_object() {
        let mut store = ShortTermStore::default();
        let a = store.upsert("apple", pos("fruit table"), "a red round apple on the close side", 0);
        assert_eq!(store.len(), 1);
        let b = store.upsert("apple", pos("storage rack"), "a red round apple on the close side", 1);
        assert_eq!(store.len(), 1);
        assert!(b.id > a.id);
        assert_eq!(store.units()[0].position.site, "storage rack");
    }

    #[test]
    fn ids_strictly_increase() {
        let mut store = ShortTermStore::default();
        let mut last = None;
        for i in 0..100 {
            let u = store.upsert(&format!("obj{}", i % 7), pos("toy rack"), "x", i);
            assert!(last.map_or(true, |l| u.id > l));
            last = Some(u.id);
        }
        assert_eq!(store.len(), 7);
    }

    #[test]
    fn identical_text_retrieves_its_unit() {
        let mut store = ShortTermStore::default();
        store.upsert("apple", pos("fruit table"), "a red round apple on the close side", 0);
        let u = store.upsert("toy duck", pos("toy rack"), "a yellow duck toy duck on the close side", 1);
        let (found, score) = store.retrieve_scored(&u.render()).unwrap();
        assert_eq!(found.id, u.id);
        assert!((score - 1.0).abs() < 1e-12);
        assert!(ShortTermStore::default().retrieve("anything").is_none());
        assert!(store.retrieve("zebra xylophone quantum").is_none());
    }

    #[test]
    fn yellow_fruit_scenario_hints_storage_rack() {
        let mut store = ShortTermStore::default();
        store.upsert("banana", pos("storage rack"), "a yellow long banana on the close side", 3);
        store.upsert("lemon", pos("storage rack"), "a yellow oval lemon on the close side", 7);
        let ltm = LongTermMemory::from_scene(&canonical_scene(0));
        let (_, score) = store.retrieve_scored("find a yellow fruit and place it on the dining table").unwrap();
        assert!(score >= RETRIEVAL_THRESHOLD, "{score}");
        let hints = memory_hints(&store, &ltm, "find a yellow fruit and place it on the dining table");
        assert_eq!(hints.len(), 1);
        assert!(hints[0].starts_with("according to memory, "));
        assert!(hints[0].contains("storage rack"));
    }

    #[test]
    fn embeddings_are_unit_and_deterministic() {
        let e = HashedBagOfWords::default();
        let v = e.embed("Pick up the lemon");
        assert_eq!(v, e.embed("pick up THE lemon"));
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(e.embed("!!!").iter().any(|x| *x != 0.0));
        assert!((cosine(&v, &v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn long_term_lookup() {
        let scene = canonical_scene(0);
        let ltm = LongTermMemory::from_scene(&scene);
        assert_eq!(ltm.lookup("fruit table").unwrap(), scene.site("fruit table").unwrap().anchor());
        assert_eq!(ltm.lookup("shipping shelf").unwrap(), scene.site("shipping table").unwrap().anchor());
        assert_eq!(ltm.lookup("moon"), Err(MemoryError::UnknownLabel("moon".into())));
        for site in &scene.sites {
            let c = ltm.lookup(&site.name).unwrap();
            assert!(ltm.grid.in_bounds(c));
        }
    }

    #[test]
    fn dump_and_load() {
        let mut store = ShortTermStore::default();
        store.upsert("apple", pos("fruit table"), "s", 0);
        store.upsert("plum", pos("fruit table"), "t", 1);
        let back = ShortTermStore::load_jsonl(&store.dump_jsonl(), Arc::new(HashedBagOfWords::default())).unwrap();
        assert_eq!(back.units(), store.units());
        let mut back = back;
        assert_eq!(back.upsert("kiwi", pos("fruit table"), "k", 2).id, 2);
        assert!(ShortTermStore::load_jsonl("{", Arc::new(HashedBagOfWords::default())).is_err());
    }
}
