use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::domain::{Cell, GridMap, Offset, MOVES};

use super::obstacles::{Mover, Obstacles};
use super::{PlanError, Trajectory};

/// Static (constraint-free) anchor distances to a fixed target anchor.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    width: u32,
    dist: Vec<Option<u32>>,
}

impl DistanceMap {
    /// BFS over valid placements of `shape`, outward from `target`.
    pub fn new(map: &GridMap, shape: &[Offset], target: Cell) -> Self {
        let mut dist = vec![None; map.cell_count()];
        let fits = |c: Cell| shape.iter().all(|&d| map.is_passable(c.shifted(d)));
        if fits(target) {
            dist[map.index(target).unwrap()] = Some(0);
            let mut queue = VecDeque::from([target]);
            while let Some(c) = queue.pop_front() {
                let next = dist[map.index(c).unwrap()].unwrap() + 1;
                for &m in &MOVES[1..] {
                    let n = c.shifted(m);
                    if !map.in_bounds(n) || !fits(n) {
                        continue;
                    }
                    let slot = &mut dist[map.index(n).unwrap()];
                    if slot.is_none() {
                        *slot = Some(next);
                        queue.push_back(n);
                    }
                }
            }
        }
        DistanceMap {
            width: map.width(),
            dist,
        }
    }

    pub fn get(&self, anchor: Cell) -> Option<u32> {
        if anchor.x < 0 || anchor.y < 0 || anchor.x as u32 >= self.width {
            return None;
        }
        let i = anchor.y as usize * self.width as usize + anchor.x as usize;
        self.dist.get(i).copied().flatten()
    }
}

/// Earliest-arrival space-time A* for a single agent or a rigid convoy.
///
/// Finds the trajectory from `from` at `start_time` reaching `to` as early as
/// possible while no member ever stands on a cell it is constrained from.
/// With `resting` flags set, the flagged members must also be able to stay at
/// their goal cells forever after arrival.
pub fn unified_a_star(
    map: &GridMap,
    mover: Mover<'_>,
    from: Cell,
    start_time: u32,
    to: Cell,
    obs: &dyn Obstacles,
    resting: &[bool],
) -> Result<Trajectory, PlanError> {
    for anchor in [from, to] {
        if !mover.fits(map, anchor) {
            return Err(PlanError::InvalidPlacement(anchor));
        }
    }
    let h = DistanceMap::new(map, mover.shape, to);
    let Some(h0) = h.get(from) else {
        return Err(PlanError::Unreachable);
    };
    if !mover.free_at(map, obs, from, start_time) {
        return Err(PlanError::Infeasible);
    }
    // Past the last restricted timestep every state looks the same as the
    // one at `cap`, so those are folded together for duplicate detection.
    let cap = mover.horizon(obs).max(start_time) + 1;
    let key = |c: Cell, t: u32| (c, t.min(cap));

    let mut open = BinaryHeap::new();
    let mut parent: HashMap<(Cell, u32), (Cell, u32)> = HashMap::new();
    let mut closed: HashMap<(Cell, u32), ()> = HashMap::new();
    open.push(Reverse((start_time + h0, Reverse(start_time), from.x, from.y)));
    while let Some(Reverse((_, Reverse(t), x, y))) = open.pop() {
        let cell = Cell::new(x, y);
        if closed.insert(key(cell, t), ()).is_some() {
            continue;
        }
        if cell == to && mover.can_rest(obs, to, t, resting) {
            let mut anchors = vec![cell];
            let mut cur = (cell, t);
            while let Some(&p) = parent.get(&cur) {
                anchors.push(p.0);
                cur = p;
            }
            anchors.reverse();
            return Ok(Trajectory {
                start_time,
                anchors,
            });
        }
        for &m in &MOVES {
            let n = cell.shifted(m);
            let Some(hn) = h.get(n) else { continue };
            if closed.contains_key(&key(n, t + 1)) || !mover.free_at(map, obs, n, t + 1) {
                continue;
            }
            parent.entry((n, t + 1)).or_insert((cell, t));
            open.push(Reverse((t + 1 + hn, Reverse(t + 1), n.x, n.y)));
        }
    }
    Err(PlanError::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Constraint;
    use crate::lowlevel::{ConstraintTable, Unrestricted};

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    fn single(
        map: &GridMap,
        agent: usize,
        from: Cell,
        to: Cell,
        start: u32,
        obs: &dyn Obstacles,
    ) -> Result<Trajectory, PlanError> {
        let id = [agent];
        unified_a_star(map, Mover::single(&id), from, start, to, obs, &[false])
    }

    #[test]
    fn standing_on_goal_is_a_zero_length_trajectory() {
        let map = GridMap::open(4, 4).unwrap();
        let tr = single(&map, 0, c(0, 0), c(0, 0), 3, &Unrestricted).unwrap();
        assert_eq!(tr.anchors, vec![c(0, 0)]);
        assert_eq!(tr.arrival(), 3);
    }

    #[test]
    fn open_grid_arrival_is_manhattan() {
        let map = GridMap::open(8, 8).unwrap();
        let tr = single(&map, 0, c(0, 0), c(6, 1), 2, &Unrestricted).unwrap();
        assert_eq!(tr.arrival(), 9);
    }

    #[test]
    fn constraint_forces_wait_or_detour() {
        let map = GridMap::open(8, 8).unwrap();
        let table = ConstraintTable::new(&[Constraint::new(0, c(1, 0), 1)]);
        let tr = single(&map, 0, c(0, 0), c(2, 0), 0, &table).unwrap();
        assert_eq!(tr.arrival(), 3);
        assert_ne!(tr.anchors[1], c(1, 0));
    }

    #[test]
    fn walled_off_goal_is_unreachable() {
        let map = GridMap::new(3, 1, [c(1, 0)]).unwrap();
        assert_eq!(
            single(&map, 0, c(0, 0), c(2, 0), 0, &Unrestricted),
            Err(PlanError::Unreachable)
        );
    }

    #[test]
    fn boxed_in_agent_is_infeasible() {
        let map = GridMap::open(2, 1).unwrap();
        let cons: Vec<_> = [c(0, 0), c(1, 0)]
            .into_iter()
            .map(|v| Constraint::new(0, v, 1))
            .collect();
        let table = ConstraintTable::new(&cons);
        assert_eq!(
            single(&map, 0, c(0, 0), c(1, 0), 0, &table),
            Err(PlanError::Infeasible)
        );
    }

    #[test]
    fn resting_requires_a_clear_goal_afterwards() {
        let map = GridMap::open(3, 1).unwrap();
        let table = ConstraintTable::new(&[Constraint::new(0, c(2, 0), 6)]);
        let id = [0];
        let tr = unified_a_star(&map, Mover::single(&id), c(0, 0), 0, c(2, 0), &table, &[true])
            .unwrap();
        assert_eq!(tr.arrival(), 7);
        let tr = unified_a_star(&map, Mover::single(&id), c(0, 0), 0, c(2, 0), &table, &[false])
            .unwrap();
        assert_eq!(tr.arrival(), 2);
    }

    #[test]
    fn convoy_moves_rigidly_around_obstacles() {
        // 2x1 convoy must go around a blocked cell in the middle row.
        let map = GridMap::new(5, 3, [c(2, 1)]).unwrap();
        let shape = [Offset::new(0, 0), Offset::new(1, 0)];
        let agents = [0, 1];
        let mover = Mover::new(&shape, &agents);
        let tr = unified_a_star(&map, mover, c(0, 1), 0, c(3, 1), &Unrestricted, &[false; 2])
            .unwrap();
        assert_eq!(tr.arrival(), 5);
        for a in &tr.anchors {
            assert!(mover.fits(&map, *a));
        }
    }
}
