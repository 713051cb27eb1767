//! World model: grid, agents, cooperative tasks, convoys, footprints,
//! constraints, phase-labelled paths and the sum-of-costs objective.
//!
//! Coordinates are `(x, y)` with the origin at the bottom-left cell. Moves are
//! 4-connected plus waiting in place.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grid vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn shifted(self, offset: Offset) -> Cell {
        Cell::new(self.x + offset.dx, self.y + offset.dy)
    }

    /// Offset that carries `origin` onto `self`.
    pub fn offset_from(self, origin: Cell) -> Offset {
        Offset::new(self.x - origin.x, self.y - origin.y)
    }

    /// True for a wait or a single 4-connected step.
    pub fn is_step_to(self, other: Cell) -> bool {
        self.manhattan(other) <= 1
    }
}

impl From<(i32, i32)> for Cell {
    fn from((x, y): (i32, i32)) -> Self {
        Cell::new(x, y)
    }
}

impl From<Cell> for (i32, i32) {
    fn from(c: Cell) -> Self {
        (c.x, c.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Relative displacement of a convoy member from the convoy's reference cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct Offset {
    pub dx: i32,
    pub dy: i32,
}

impl Offset {
    pub const ZERO: Offset = Offset { dx: 0, dy: 0 };

    pub const fn new(dx: i32, dy: i32) -> Self {
        Offset { dx, dy }
    }
}

impl From<(i32, i32)> for Offset {
    fn from((dx, dy): (i32, i32)) -> Self {
        Offset::new(dx, dy)
    }
}

impl From<Offset> for (i32, i32) {
    fn from(o: Offset) -> Self {
        (o.dx, o.dy)
    }
}

/// The five moves of the space-time graph, wait first.
pub const MOVES: [Offset; 5] = [
    Offset::new(0, 0),
    Offset::new(1, 0),
    Offset::new(-1, 0),
    Offset::new(0, 1),
    Offset::new(0, -1),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("grid dimensions must be positive, got {width}x{height}")]
    EmptyGrid { width: u32, height: u32 },
    #[error("cell {0} lies outside the grid")]
    OutOfBounds(Cell),
    #[error("cell {0} is blocked")]
    Blocked(Cell),
    #[error("agent ids must be 0..n-1 in order; found {found} at position {position}")]
    AgentId { position: usize, found: usize },
    #[error("agents {0} and {1} share a start cell")]
    SharedStart(usize, usize),
    #[error("task ids must be 0..m-1 in order; found {found} at position {position}")]
    TaskId { position: usize, found: usize },
    #[error("task {task}: {reason}")]
    Task { task: usize, reason: String },
    #[error("task {task} needs {k} agents but only {agents} exist")]
    TooFewAgents { task: usize, k: usize, agents: usize },
    #[error("malformed path for agent {agent}: {reason}")]
    MalformedPath { agent: usize, reason: String },
}

/// 4-connected grid world. Passable cells form the vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: u32,
    height: u32,
    blocked: Vec<bool>,
}

impl GridMap {
    pub fn new(
        width: u32,
        height: u32,
        blocked: impl IntoIterator<Item = Cell>,
    ) -> Result<Self, DomainError> {
        if width == 0 || height == 0 {
            return Err(DomainError::EmptyGrid { width, height });
        }
        let mut map = GridMap {
            width,
            height,
            blocked: vec![false; (width * height) as usize],
        };
        for cell in blocked {
            let idx = map.index(cell).ok_or(DomainError::OutOfBounds(cell))?;
            map.blocked[idx] = true;
        }
        Ok(map)
    }

    /// A grid without obstacles.
    pub fn open(width: u32, height: u32) -> Result<Self, DomainError> {
        Self::new(width, height, std::iter::empty())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.blocked.len()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height
    }

    /// Dense index of an in-bounds cell (row-major from the bottom row).
    pub fn index(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c)
            .then(|| c.y as usize * self.width as usize + c.x as usize)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let w = self.width as usize;
        Cell::new((index % w) as i32, (index / w) as i32)
    }

    pub fn is_passable(&self, c: Cell) -> bool {
        self.index(c).is_some_and(|i| !self.blocked[i])
    }

    pub fn passable_count(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn passable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.blocked.len())
            .filter(|&i| !self.blocked[i])
            .map(|i| self.cell_at(i))
    }

    pub fn blocked_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.blocked.len())
            .filter(|&i| self.blocked[i])
            .map(|i| self.cell_at(i))
    }

    /// Passable 4-neighbours of `c`.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        MOVES[1..]
            .iter()
            .map(move |&m| c.shifted(m))
            .filter(|&n| self.is_passable(n))
    }

    /// Whether all passable cells form a single 4-connected component.
    pub fn is_connected(&self) -> bool {
        let mut cells = self.passable_cells();
        let Some(first) = cells.next() else {
            return true;
        };
        let mut seen = vec![false; self.cell_count()];
        let mut queue = VecDeque::from([first]);
        seen[self.index(first).unwrap()] = true;
        let mut count = 1;
        while let Some(c) = queue.pop_front() {
            for n in self.neighbors(c) {
                let i = self.index(n).unwrap();
                if !seen[i] {
                    seen[i] = true;
                    count += 1;
                    queue.push_back(n);
                }
            }
        }
        count == self.passable_count()
    }
}

/// `{ anchor + δ | δ ∈ shape }`, in shape order.
pub fn footprint(shape: &[Offset], anchor: Cell) -> Vec<Cell> {
    shape.iter().map(|&d| anchor.shifted(d)).collect()
}

/// True iff every footprint cell is in bounds and passable.
pub fn validate_placement(map: &GridMap, shape: &[Offset], anchor: Cell) -> bool {
    shape.iter().all(|&d| map.is_passable(anchor.shifted(d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: usize,
    pub start: Cell,
}

/// A cooperative task needing `k` agents, one per slot.
///
/// Slot `i` starts at `starts[i]` and ends at `goals[i]`; the goal
/// configuration is a rigid translation of the start configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    pub id: usize,
    starts: Vec<Cell>,
    goals: Vec<Cell>,
    shape: Vec<Offset>,
}

impl TaskSpec {
    pub fn new(id: usize, starts: Vec<Cell>, goals: Vec<Cell>) -> Result<Self, DomainError> {
        let fail = |reason: String| DomainError::Task { task: id, reason };
        if starts.is_empty() {
            return Err(fail("a task needs at least one slot".into()));
        }
        if starts.len() != goals.len() {
            return Err(fail(format!(
                "{} start slots but {} goal cells",
                starts.len(),
                goals.len()
            )));
        }
        for (name, cfg) in [("start", &starts), ("goal", &goals)] {
            let distinct: HashSet<_> = cfg.iter().collect();
            if distinct.len() != cfg.len() {
                return Err(fail(format!("{name} configuration repeats a cell")));
            }
            if !is_connected_set(cfg) {
                return Err(fail(format!("{name} configuration is not 4-connected")));
            }
        }
        let shift = goals[0].offset_from(starts[0]);
        if starts.iter().zip(&goals).any(|(s, g)| g.offset_from(*s) != shift) {
            return Err(fail(
                "goal configuration is not a translation of the start configuration".into(),
            ));
        }
        let shape = starts.iter().map(|s| s.offset_from(starts[0])).collect();
        Ok(TaskSpec {
            id,
            starts,
            goals,
            shape,
        })
    }

    pub fn k(&self) -> usize {
        self.starts.len()
    }

    pub fn starts(&self) -> &[Cell] {
        &self.starts
    }

    pub fn goals(&self) -> &[Cell] {
        &self.goals
    }

    /// Member offsets relative to slot 0; `shape()[0]` is always `(0, 0)`.
    pub fn shape(&self) -> &[Offset] {
        &self.shape
    }

    pub fn start_anchor(&self) -> Cell {
        self.starts[0]
    }

    pub fn goal_anchor(&self) -> Cell {
        self.goals[0]
    }

    pub fn slot(&self, slot: usize) -> Cell {
        self.starts[slot]
    }

    pub fn goal(&self, slot: usize) -> Cell {
        self.goals[slot]
    }
}

fn is_connected_set(cells: &[Cell]) -> bool {
    let set: HashSet<Cell> = cells.iter().copied().collect();
    let mut seen = HashSet::from([cells[0]]);
    let mut stack = vec![cells[0]];
    while let Some(c) = stack.pop() {
        for m in &MOVES[1..] {
            let n = c.shifted(*m);
            if set.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == set.len()
}

/// One slot of one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct SlotRef {
    pub task: usize,
    pub slot: usize,
}

impl SlotRef {
    pub const fn new(task: usize, slot: usize) -> Self {
        SlotRef { task, slot }
    }
}

impl From<(usize, usize)> for SlotRef {
    fn from((task, slot): (usize, usize)) -> Self {
        SlotRef { task, slot }
    }
}

impl From<SlotRef> for (usize, usize) {
    fn from(s: SlotRef) -> Self {
        (s.task, s.slot)
    }
}

impl fmt::Display for SlotRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.task, self.slot)
    }
}

/// Agent `agent` may not occupy `cell` at timestep `t`, whatever phase it is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub agent: usize,
    pub cell: Cell,
    pub t: u32,
}

impl Constraint {
    pub const fn new(agent: usize, cell: Cell, t: u32) -> Self {
        Constraint { agent, cell, t }
    }
}

/// Canonically ordered constraint set (agent, then cell, then timestep).
pub type ConstraintSet = BTreeSet<Constraint>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityKind {
    Single,
    Convoy { task: usize },
}

/// A moving body: a lone agent or the rigid convoy of a task's team.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Entity {
    pub kind: EntityKind,
    /// Member agents in slot order; `members[0]` is the reference agent.
    pub members: Vec<usize>,
    pub shape: Vec<Offset>,
}

impl Entity {
    pub fn single(agent: usize) -> Self {
        Entity {
            kind: EntityKind::Single,
            members: vec![agent],
            shape: vec![Offset::ZERO],
        }
    }

    pub fn convoy(task: &TaskSpec, members: Vec<usize>) -> Self {
        debug_assert_eq!(members.len(), task.k());
        Entity {
            kind: EntityKind::Convoy { task: task.id },
            members,
            shape: task.shape().to_vec(),
        }
    }

    pub fn reference_agent(&self) -> usize {
        self.members[0]
    }

    pub fn footprint(&self, anchor: Cell) -> Vec<Cell> {
        footprint(&self.shape, anchor)
    }

    /// Member occupying `cell` when anchored at `anchor`.
    pub fn member_at(&self, anchor: Cell, cell: Cell) -> Option<usize> {
        self.shape
            .iter()
            .position(|&d| anchor.shifted(d) == cell)
            .map(|i| self.members[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    Assembly(SlotRef),
    Convoy(usize),
}

/// Inclusive timestep interval `[start, end]` spent in one phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: u32,
    pub end: u32,
    pub phase: Phase,
}

/// Time-indexed vertex sequence of one agent, `vertices[t]` for `t = 0..=T`.
///
/// After `T` the agent rests at its last vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub agent: usize,
    pub vertices: Vec<Cell>,
    pub segments: Vec<Segment>,
}

impl Path {
    pub fn end_time(&self) -> u32 {
        self.vertices.len() as u32 - 1
    }

    /// Position at `t`, resting at the final vertex afterwards.
    pub fn at(&self, t: u32) -> Cell {
        let i = (t as usize).min(self.vertices.len() - 1);
        self.vertices[i]
    }

    pub fn last(&self) -> Cell {
        *self.vertices.last().expect("paths are never empty")
    }

    /// Completion time of the final convoy segment, or 0 for an agent that
    /// never joined a task.
    pub fn completion_time(&self) -> u32 {
        self.segments
            .iter()
            .rev()
            .find(|s| matches!(s.phase, Phase::Convoy(_)))
            .map_or(0, |s| s.end)
    }

    /// Convoy task and the member's slot at `t`, if `t` lies in a convoy segment.
    pub fn convoy_at(&self, t: u32) -> Option<SlotRef> {
        let i = self
            .segments
            .iter()
            .position(|s| s.start <= t && t <= s.end && matches!(s.phase, Phase::Convoy(_)))?;
        let Phase::Convoy(task) = self.segments[i].phase else {
            unreachable!()
        };
        let slot = self.segments[..i].iter().rev().find_map(|s| match s.phase {
            Phase::Assembly(r) if r.task == task => Some(r.slot),
            _ => None,
        })?;
        Some(SlotRef::new(task, slot))
    }

    /// Checks the shape invariants that hold for every path: non-empty, all
    /// steps wait-or-adjacent, segments contiguous from 0 to the end.
    pub fn check_structure(&self, map: &GridMap) -> Result<(), DomainError> {
        let fail = |reason: String| DomainError::MalformedPath {
            agent: self.agent,
            reason,
        };
        if self.vertices.is_empty() {
            return Err(fail("no vertices".into()));
        }
        if let Some(c) = self.vertices.iter().find(|c| !map.is_passable(**c)) {
            return Err(fail(format!("visits impassable cell {c}")));
        }
        if let Some(t) = self.vertices.windows(2).position(|w| !w[0].is_step_to(w[1])) {
            return Err(fail(format!("jump between t={} and t={}", t, t + 1)));
        }
        let Some(first) = self.segments.first() else {
            return Err(fail("no segments".into()));
        };
        if first.start != 0 {
            return Err(fail("first segment does not start at t=0".into()));
        }
        for w in self.segments.windows(2) {
            if w[0].end != w[1].start || w[0].start > w[0].end {
                return Err(fail("segments are not contiguous".into()));
            }
        }
        let last = self.segments.last().unwrap();
        if last.start > last.end || last.end != self.end_time() {
            return Err(fail("segments do not cover the vertex sequence".into()));
        }
        Ok(())
    }
}

/// Terminal status of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    #[default]
    Solved,
    Timeout,
    Memout,
    Exhausted,
    Stuck,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Solved => "solved",
            Status::Timeout => "timeout",
            Status::Memout => "memout",
            Status::Exhausted => "exhausted",
            Status::Stuck => "stuck",
        })
    }
}

/// Per-run search counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolverStats {
    pub task_expansions: u64,
    pub conflict_expansions: u64,
    pub nodes_generated: u64,
    pub nodes_popped: u64,
    pub duplicates_skipped: u64,
    /// Wall-clock time; excluded from solution files so they stay reproducible.
    #[serde(skip)]
    pub runtime_ms: u64,
    pub peak_open_size: u64,
    pub status: Status,
}

/// A complete plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    /// Per agent, the slots it fills in execution order.
    pub assignments: Vec<Vec<SlotRef>>,
    pub paths: Vec<Path>,
    pub soc: u64,
    pub stats: SolverStats,
}

/// Sum over agents of the completion time of each agent's last task.
pub fn solution_cost(solution: &Solution) -> Result<u64, DomainError> {
    solution.paths.iter().try_fold(0u64, |acc, p| {
        if p.vertices.is_empty() || p.segments.is_empty() {
            return Err(DomainError::MalformedPath {
                agent: p.agent,
                reason: "empty path".into(),
            });
        }
        Ok(acc + p.completion_time() as u64)
    })
}

/// A problem instance: map, agents and tasks, validated together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub map: GridMap,
    pub agents: Vec<AgentSpec>,
    pub tasks: Vec<TaskSpec>,
}

impl Instance {
    pub fn new(
        map: GridMap,
        agents: Vec<AgentSpec>,
        tasks: Vec<TaskSpec>,
    ) -> Result<Self, DomainError> {
        for (i, a) in agents.iter().enumerate() {
            if a.id != i {
                return Err(DomainError::AgentId {
                    position: i,
                    found: a.id,
                });
            }
            check_cell(&map, a.start)?;
            if let Some(b) = agents[..i].iter().find(|b| b.start == a.start) {
                return Err(DomainError::SharedStart(b.id, a.id));
            }
        }
        for (i, task) in tasks.iter().enumerate() {
            if task.id != i {
                return Err(DomainError::TaskId {
                    position: i,
                    found: task.id,
                });
            }
            for &c in task.starts().iter().chain(task.goals()) {
                check_cell(&map, c)?;
            }
            if task.k() > agents.len() {
                return Err(DomainError::TooFewAgents {
                    task: task.id,
                    k: task.k(),
                    agents: agents.len(),
                });
            }
        }
        Ok(Instance { map, agents, tasks })
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn slot_count(&self) -> usize {
        self.tasks.iter().map(TaskSpec::k).sum()
    }

    pub fn slot_cell(&self, slot: SlotRef) -> Cell {
        self.tasks[slot.task].slot(slot.slot)
    }

    pub fn goal_cell(&self, slot: SlotRef) -> Cell {
        self.tasks[slot.task].goal(slot.slot)
    }
}

fn check_cell(map: &GridMap, c: Cell) -> Result<(), DomainError> {
    if !map.in_bounds(c) {
        Err(DomainError::OutOfBounds(c))
    } else if !map.is_passable(c) {
        Err(DomainError::Blocked(c))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    fn fig1_task3() -> TaskSpec {
        TaskSpec::new(
            2,
            vec![c(4, 6), c(5, 6), c(6, 6), c(5, 5)],
            vec![c(2, 2), c(3, 2), c(4, 2), c(3, 1)],
        )
        .unwrap()
    }

    #[test]
    fn single_agent_footprint_is_anchor() {
        let e = Entity::single(0);
        assert_eq!(e.footprint(c(3, 3)), vec![c(3, 3)]);
    }

    #[test]
    fn convoy_footprint_matches_task_configurations() {
        let task = fig1_task3();
        assert_eq!(
            task.shape(),
            &[
                Offset::new(0, 0),
                Offset::new(1, 0),
                Offset::new(2, 0),
                Offset::new(1, -1)
            ]
        );
        let e = Entity::convoy(&task, vec![0, 1, 2, 3]);
        assert_eq!(e.footprint(c(2, 2)), task.goals());
        assert_eq!(e.footprint(c(4, 6)), task.starts());
    }

    #[test]
    fn placement_validity() {
        let map = GridMap::new(8, 8, [c(3, 1)]).unwrap();
        let task = fig1_task3();
        assert!(validate_placement(&map, &[Offset::ZERO], c(0, 0)));
        assert!(!validate_placement(&map, task.shape(), c(2, 2)));
        assert!(validate_placement(&map, task.shape(), c(4, 6)));
        assert!(!validate_placement(&map, task.shape(), c(6, 6)));
    }

    #[test]
    fn rotated_goal_is_rejected() {
        let err = TaskSpec::new(0, vec![c(0, 0), c(1, 0)], vec![c(4, 4), c(4, 5)]).unwrap_err();
        assert!(matches!(err, DomainError::Task { .. }));
    }

    #[test]
    fn disconnected_configuration_is_rejected() {
        assert!(TaskSpec::new(0, vec![c(0, 0), c(2, 0)], vec![c(0, 3), c(2, 3)]).is_err());
    }

    #[test]
    fn instance_checks_agent_supply() {
        let map = GridMap::open(8, 8).unwrap();
        let agents = vec![AgentSpec { id: 0, start: c(0, 0) }];
        let task = TaskSpec::new(0, fig1_task3().starts().to_vec(), fig1_task3().goals().to_vec());
        let err = Instance::new(map, agents, vec![task.unwrap()]).unwrap_err();
        assert!(matches!(err, DomainError::TooFewAgents { k: 4, .. }));
    }

    fn path(agent: usize, vs: &[(i32, i32)], segs: &[(u32, u32, Phase)]) -> Path {
        Path {
            agent,
            vertices: vs.iter().map(|&p| p.into()).collect(),
            segments: segs
                .iter()
                .map(|&(start, end, phase)| Segment { start, end, phase })
                .collect(),
        }
    }

    #[test]
    fn idle_agent_costs_nothing_and_single_task_costs_its_completion() {
        let idle = path(0, &[(0, 0)], &[(0, 0, Phase::Idle)]);
        let worker = path(
            1,
            &[(0, 0), (1, 0), (2, 0)],
            &[
                (0, 1, Phase::Assembly(SlotRef::new(0, 0))),
                (1, 2, Phase::Convoy(0)),
            ],
        );
        let sol = Solution {
            assignments: vec![vec![], vec![SlotRef::new(0, 0)]],
            paths: vec![idle, worker],
            soc: 2,
            stats: SolverStats::default(),
        };
        assert_eq!(solution_cost(&sol).unwrap(), 2);
    }

    #[test]
    fn structure_check_rejects_jumps() {
        let map = GridMap::open(4, 4).unwrap();
        let p = path(0, &[(0, 0), (2, 0)], &[(0, 1, Phase::Idle)]);
        assert!(p.check_structure(&map).is_err());
        let ok = path(0, &[(0, 0), (1, 0)], &[(0, 1, Phase::Idle)]);
        assert!(ok.check_structure(&map).is_ok());
    }

    #[test]
    fn convoy_slot_lookup_reads_preceding_assembly() {
        let p = path(
            3,
            &[(0, 0), (0, 1), (0, 2)],
            &[
                (0, 1, Phase::Assembly(SlotRef::new(4, 1))),
                (1, 2, Phase::Convoy(4)),
            ],
        );
        assert_eq!(p.convoy_at(0), None);
        assert_eq!(p.convoy_at(1), Some(SlotRef::new(4, 1)));
        assert_eq!(p.convoy_at(2), Some(SlotRef::new(4, 1)));
    }
}
