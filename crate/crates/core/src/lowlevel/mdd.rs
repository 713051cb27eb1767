use crate::domain::{Cell, GridMap, MOVES};

use super::obstacles::{Mover, Obstacles};

/// Forward space-time reachability: `layer(t)` holds every anchor the mover
/// can occupy at `t` after leaving `from` at `start_time`.
#[derive(Debug, Clone)]
pub struct Reachability {
    start_time: u32,
    layers: Vec<Vec<bool>>,
}

impl Reachability {
    pub fn new(
        map: &GridMap,
        mover: Mover<'_>,
        from: Cell,
        start_time: u32,
        obs: &dyn Obstacles,
    ) -> Self {
        let mut first = vec![false; map.cell_count()];
        if mover.free_at(map, obs, from, start_time) {
            first[map.index(from).unwrap()] = true;
        }
        Reachability {
            start_time,
            layers: vec![first],
        }
    }

    pub fn start_time(&self) -> u32 {
        self.start_time
    }

    /// Last timestep computed so far.
    pub fn end_time(&self) -> u32 {
        self.start_time + self.layers.len() as u32 - 1
    }

    /// Grows the layers up to and including `t`.
    pub fn extend_to(&mut self, map: &GridMap, mover: Mover<'_>, obs: &dyn Obstacles, t: u32) {
        while self.end_time() < t {
            let now = self.end_time() + 1;
            let prev = self.layers.last().unwrap();
            let mut next = vec![false; prev.len()];
            for (i, _) in prev.iter().enumerate().filter(|(_, r)| **r) {
                let c = map.cell_at(i);
                for &m in &MOVES {
                    let n = c.shifted(m);
                    if let Some(j) = map.index(n) {
                        if !next[j] && mover.free_at(map, obs, n, now) {
                            next[j] = true;
                        }
                    }
                }
            }
            self.layers.push(next);
        }
    }

    /// Whether `anchor` is reachable at exactly `t` (must be within computed layers).
    pub fn contains(&self, map: &GridMap, anchor: Cell, t: u32) -> bool {
        if t < self.start_time || t > self.end_time() {
            return false;
        }
        map.index(anchor)
            .is_some_and(|i| self.layers[(t - self.start_time) as usize][i])
    }

    /// First `t <= limit` at which `anchor` is reachable, extending as needed.
    pub fn earliest(
        &mut self,
        map: &GridMap,
        mover: Mover<'_>,
        obs: &dyn Obstacles,
        anchor: Cell,
        limit: u32,
    ) -> Option<u32> {
        let mut t = self.start_time;
        while t <= limit {
            self.extend_to(map, mover, obs, t);
            if self.contains(map, anchor, t) {
                return Some(t);
            }
            t += 1;
        }
        None
    }

    /// A trajectory ending at `anchor` at `t`, preferring to wait as late in
    /// the walk back as possible, so early arrivals idle at the destination.
    pub fn trace_back(&self, map: &GridMap, anchor: Cell, t: u32) -> Option<Vec<Cell>> {
        if !self.contains(map, anchor, t) {
            return None;
        }
        let mut out = vec![anchor];
        let mut cur = anchor;
        for now in (self.start_time..t).rev() {
            cur = MOVES
                .iter()
                .map(|&m| cur.shifted(m))
                .find(|&p| self.contains(map, p, now))
                .expect("reachable states have a reachable predecessor");
            out.push(cur);
        }
        out.reverse();
        Some(out)
    }
}

/// Multi-valued decision diagram: the anchors lying on at least one
/// restriction-respecting trajectory that ends at the goal at a fixed time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mdd {
    pub start_time: u32,
    /// `levels[i]` holds the anchors at `start_time + i`, sorted.
    pub levels: Vec<Vec<Cell>>,
}

impl Mdd {
    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(Vec::is_empty)
    }

    /// Number of steps from start to goal.
    pub fn cost(&self) -> u32 {
        self.levels.len() as u32 - 1
    }
}

/// MDD of every trajectory from `from` at `start_time` that is at `to` at
/// `end_time`. With `resting` flags, flagged members must be able to stay at
/// the goal from `end_time` on.
#[allow(clippy::too_many_arguments)]
pub fn build_mdd(
    map: &GridMap,
    mover: Mover<'_>,
    from: Cell,
    start_time: u32,
    to: Cell,
    end_time: u32,
    obs: &dyn Obstacles,
    resting: &[bool],
) -> Mdd {
    let len = end_time.saturating_sub(start_time) as usize + 1;
    let empty = Mdd {
        start_time,
        levels: vec![Vec::new(); len],
    };
    if end_time < start_time || !mover.fits(map, from) || !mover.fits(map, to) {
        return empty;
    }
    let mut fwd = Reachability::new(map, mover, from, start_time, obs);
    fwd.extend_to(map, mover, obs, end_time);
    if !fwd.contains(map, to, end_time) || !mover.can_rest(obs, to, end_time, resting) {
        return empty;
    }
    let mut levels = vec![Vec::new(); len];
    levels[len - 1] = vec![to];
    for i in (0..len - 1).rev() {
        let t = start_time + i as u32;
        let mut level: Vec<Cell> = levels[i + 1]
            .iter()
            .flat_map(|&c| MOVES.iter().map(move |&m| c.shifted(m)))
            .filter(|&p| fwd.contains(map, p, t))
            .collect();
        level.sort();
        level.dedup();
        levels[i] = level;
    }
    Mdd { start_time, levels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Constraint;
    use crate::lowlevel::{ConstraintTable, Unrestricted};

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn unconstrained_mdd_is_the_diamond_intersection() {
        let map = GridMap::open(5, 5).unwrap();
        let id = [0];
        let (s, g) = (c(0, 0), c(2, 1));
        let mdd = build_mdd(&map, Mover::single(&id), s, 0, g, 3, &Unrestricted, &[false]);
        assert_eq!(mdd.cost(), 3);
        for (t, level) in mdd.levels.iter().enumerate() {
            let expected: Vec<Cell> = map
                .passable_cells()
                .filter(|v| v.manhattan(s) == t as u32 && v.manhattan(g) == 3 - t as u32)
                .collect();
            let mut got = level.clone();
            got.sort();
            let mut exp = expected;
            exp.sort();
            assert_eq!(got, exp, "level {t}");
        }
    }

    #[test]
    fn zero_cost_mdd_is_a_single_node() {
        let map = GridMap::open(3, 3).unwrap();
        let id = [0];
        let mdd = build_mdd(&map, Mover::single(&id), c(1, 1), 4, c(1, 1), 4, &Unrestricted, &[false]);
        assert_eq!(mdd.levels, vec![vec![c(1, 1)]]);
    }

    #[test]
    fn corridor_constraint_pushes_the_mdd_one_level_deeper() {
        // 1-wide corridor (0,0)-(1,0)-(2,0); agent may not be on (1,0) at t=1.
        let map = GridMap::open(3, 1).unwrap();
        let table = ConstraintTable::new(&[Constraint::new(0, c(1, 0), 1)]);
        let id = [0];
        let m = Mover::single(&id);
        assert!(build_mdd(&map, m, c(0, 0), 0, c(2, 0), 2, &table, &[false]).is_empty());
        let mdd = build_mdd(&map, m, c(0, 0), 0, c(2, 0), 3, &table, &[false]);
        assert!(!mdd.is_empty());
        assert_eq!(mdd.levels[1], vec![c(0, 0)]);
    }

    #[test]
    fn trace_back_waits_at_the_destination() {
        let map = GridMap::open(4, 1).unwrap();
        let id = [0];
        let m = Mover::single(&id);
        let mut r = Reachability::new(&map, m, c(0, 0), 0, &Unrestricted);
        r.extend_to(&map, m, &Unrestricted, 5);
        let path = r.trace_back(&map, c(2, 0), 5).unwrap();
        assert_eq!(path, vec![c(0, 0), c(1, 0), c(2, 0), c(2, 0), c(2, 0), c(2, 0)]);
    }
}
