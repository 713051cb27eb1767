use std::collections::{HashMap, HashSet};

use crate::domain::{validate_placement, Cell, Constraint, GridMap, Offset};

/// Time-dependent restrictions seen by the low-level planners.
pub trait Obstacles {
    /// `agent` may not occupy `cell` at `t`.
    fn blocked(&self, agent: usize, cell: Cell, t: u32) -> bool;

    /// Last timestep at which any restriction on `agent` changes; afterwards
    /// the world looks static to it.
    fn horizon(&self, agent: usize) -> u32;

    /// `agent` may stay on `cell` at every timestep `>= from`.
    fn can_rest(&self, agent: usize, cell: Cell, from: u32) -> bool;
}

/// No restrictions at all.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unrestricted;

impl Obstacles for Unrestricted {
    fn blocked(&self, _: usize, _: Cell, _: u32) -> bool {
        false
    }

    fn horizon(&self, _: usize) -> u32 {
        0
    }

    fn can_rest(&self, _: usize, _: Cell, _: u32) -> bool {
        true
    }
}

#[derive(Debug, Clone, Default)]
struct AgentTable {
    forbidden: HashSet<(Cell, u32)>,
    last: u32,
    last_at: HashMap<Cell, u32>,
}

/// Constraint lookup indexed by agent.
#[derive(Debug, Clone, Default)]
pub struct ConstraintTable {
    agents: HashMap<usize, AgentTable>,
}

impl ConstraintTable {
    pub fn new<'a>(constraints: impl IntoIterator<Item = &'a Constraint>) -> Self {
        let mut table = ConstraintTable::default();
        for c in constraints {
            table.insert(*c);
        }
        table
    }

    pub fn insert(&mut self, c: Constraint) {
        let entry = self.agents.entry(c.agent).or_default();
        entry.forbidden.insert((c.cell, c.t));
        entry.last = entry.last.max(c.t);
        let at = entry.last_at.entry(c.cell).or_insert(c.t);
        *at = (*at).max(c.t);
    }

    /// Copy of this table with `extra` added.
    pub fn with(&self, extra: &[Constraint]) -> Self {
        let mut table = self.clone();
        for c in extra {
            table.insert(*c);
        }
        table
    }

    /// The constraints on `agent`, sorted.
    pub fn of_agent(&self, agent: usize) -> Vec<(Cell, u32)> {
        let mut out: Vec<(Cell, u32)> = self
            .agents
            .get(&agent)
            .map(|a| a.forbidden.iter().copied().collect())
            .unwrap_or_default();
        out.sort_unstable();
        out
    }

    /// Whether `agent` has any constraint on `cell`, at any time.
    pub fn touches(&self, agent: usize, cell: Cell) -> bool {
        self.agents
            .get(&agent)
            .is_some_and(|a| a.last_at.contains_key(&cell))
    }
}

impl Obstacles for ConstraintTable {
    fn blocked(&self, agent: usize, cell: Cell, t: u32) -> bool {
        self.agents
            .get(&agent)
            .is_some_and(|a| a.forbidden.contains(&(cell, t)))
    }

    fn horizon(&self, agent: usize) -> u32 {
        self.agents.get(&agent).map_or(0, |a| a.last)
    }

    fn can_rest(&self, agent: usize, cell: Cell, from: u32) -> bool {
        self.agents
            .get(&agent)
            .and_then(|a| a.last_at.get(&cell))
            .is_none_or(|&last| last < from)
    }
}

/// A body to plan for: member agents with their offsets from the anchor.
///
/// A lone agent is a mover with one member at offset `(0, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct Mover<'a> {
    pub shape: &'a [Offset],
    pub agents: &'a [usize],
}

const SINGLE_SHAPE: [Offset; 1] = [Offset::ZERO];

impl<'a> Mover<'a> {
    pub fn single(agent: &'a [usize; 1]) -> Self {
        Mover {
            shape: &SINGLE_SHAPE,
            agents: agent,
        }
    }

    pub fn new(shape: &'a [Offset], agents: &'a [usize]) -> Self {
        debug_assert_eq!(shape.len(), agents.len());
        Mover { shape, agents }
    }

    pub fn fits(&self, map: &GridMap, anchor: Cell) -> bool {
        validate_placement(map, self.shape, anchor)
    }

    /// Placement valid and no member constrained at `t`.
    pub fn free_at(&self, map: &GridMap, obs: &dyn Obstacles, anchor: Cell, t: u32) -> bool {
        self.fits(map, anchor)
            && self
                .shape
                .iter()
                .zip(self.agents)
                .all(|(&d, &a)| !obs.blocked(a, anchor.shifted(d), t))
    }

    pub fn horizon(&self, obs: &dyn Obstacles) -> u32 {
        self.agents.iter().map(|&a| obs.horizon(a)).max().unwrap_or(0)
    }

    /// Members flagged in `resting` can all stay at `anchor + δ` from `from` on.
    pub fn can_rest(&self, obs: &dyn Obstacles, anchor: Cell, from: u32, resting: &[bool]) -> bool {
        self.shape
            .iter()
            .zip(self.agents)
            .zip(resting)
            .filter(|(_, &r)| r)
            .all(|((&d, &a), _)| obs.can_rest(a, anchor.shifted(d), from))
    }
}
