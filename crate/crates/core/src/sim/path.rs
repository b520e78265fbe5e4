//! Uniform-cost search on the occupancy grid.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::SimError;
use crate::scene::{Cell, Direction, GridMap};

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    /// `(cells.len() - 1) * resolution`, in meters.
    pub length: f64,
}

impl GridPath {
    pub fn steps(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }
}

struct Search {
    dist: Vec<Option<u32>>,
    parent: Vec<Option<usize>>,
}

/// Dijkstra over 4-connected free cells with unit edge costs. Neighbors are
/// expanded up, right, down, left; equal-cost entries pop in insertion
/// order, which makes the returned path deterministic.
fn dijkstra(grid: &GridMap, from: Cell, target: Option<Cell>) -> Search {
    let n = grid.occupancy().len();
    let mut dist = vec![None; n];
    let mut parent = vec![None; n];
    let Some(start) = grid.index(from).filter(|_| grid.is_free(from)) else {
        return Search { dist, parent };
    };
    let target = target.and_then(|t| grid.index(t));
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut seq: u64 = 0;
    dist[start] = Some(0);
    heap.push(Reverse((0u32, seq, start)));
    while let Some(Reverse((d, _, idx))) = heap.pop() {
        if settled[idx] {
            continue;
        }
        settled[idx] = true;
        if Some(idx) == target {
            break;
        }
        let cell = grid.cell_at(idx);
        for dir in Direction::ALL {
            let next = cell.step(dir);
            if grid.is_blocked(next) {
                continue;
            }
            let ni = grid.index(next).expect("free cells are in bounds");
            let nd = d + 1;
            if dist[ni].map_or(true, |old| nd < old) {
                dist[ni] = Some(nd);
                parent[ni] = Some(idx);
                seq += 1;
                heap.push(Reverse((nd, seq, ni)));
            }
        }
    }
    Search { dist, parent }
}

/// Step distances from `from` to every cell; `None` where unreachable.
pub fn distance_field(grid: &GridMap, from: Cell) -> Vec<Option<u32>> {
    dijkstra(grid, from, None).dist
}

/// Shortest 4-connected path between two free cells.
pub fn shortest_path(grid: &GridMap, from: Cell, to: Cell) -> Result<GridPath, SimError> {
    if grid.is_blocked(from) || grid.is_blocked(to) {
        return Err(SimError::Unreachable);
    }
    let search = dijkstra(grid, from, Some(to));
    let goal = grid.index(to).expect("checked free");
    if search.dist[goal].is_none() {
        return Err(SimError::Unreachable);
    }
    let mut cells = vec![to];
    let mut cur = goal;
    while let Some(p) = search.parent[cur] {
        cells.push(grid.cell_at(p));
        cur = p;
    }
    cells.reverse();
    let length = (cells.len() - 1) as f64 * grid.resolution();
    Ok(GridPath { cells, length })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_corridor() {
        let grid = GridMap::new(10, 1, 0.1).unwrap();
        let p = shortest_path(&grid, Cell::new(0, 0), Cell::new(9, 0)).unwrap();
        assert_eq!(p.cells.len(), 10);
        assert!((p.length - 0.9).abs() < 1e-12);
    }

    #[test]
    fn identity_path() {
        let grid = GridMap::new(4, 4, 0.1).unwrap();
        let p = shortest_path(&grid, Cell::new(2, 2), Cell::new(2, 2)).unwrap();
        assert_eq!(p.cells, vec![Cell::new(2, 2)]);
        assert_eq!(p.length, 0.0);
    }

    #[test]
    fn walled_target_is_unreachable() {
        let mut grid = GridMap::new(5, 5, 0.1).unwrap();
        for x in 0..5 {
            grid.set_blocked(Cell::new(x, 2), true);
        }
        assert_eq!(
            shortest_path(&grid, Cell::new(0, 0), Cell::new(0, 4)),
            Err(SimError::Unreachable)
        );
        assert_eq!(
            shortest_path(&grid, Cell::new(0, 0), Cell::new(0, 2)),
            Err(SimError::Unreachable)
        );
    }

    #[test]
    fn tie_break_prefers_up_first() {
        // From (0,0) to (1,1) both (0,1) and (1,0) are optimal; up wins.
        let grid = GridMap::new(2, 2, 1.0).unwrap();
        let p = shortest_path(&grid, Cell::new(0, 0), Cell::new(1, 1)).unwrap();
        assert_eq!(p.cells, vec![Cell::new(0, 0), Cell::new(0, 1), Cell::new(1, 1)]);
    }
}
