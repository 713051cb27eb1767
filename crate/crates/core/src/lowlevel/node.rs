use std::collections::HashMap;

use crate::domain::{Cell, Instance, Offset, Path, Phase, Segment, SlotRef};

use super::astar::unified_a_star;
use super::obstacles::{ConstraintTable, Mover, Obstacles};
use super::task::{plan_task_execution, TaskPlan};
use super::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegKind {
    /// Travel to a slot of a fully staffed task, arriving by `end_time`.
    Assembly(SlotRef),
    /// Travel to a slot of a partially staffed task.
    Partial(SlotRef),
    Convoy(usize),
    /// Never assigned: stationary at the start cell.
    Idle,
}

/// One planned stretch of an itinerary, kept so that callers can ask how
/// expensive the stretch becomes under extra constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leg {
    pub kind: LegKind,
    pub agents: Vec<usize>,
    pub shape: Vec<Offset>,
    pub from: Cell,
    pub start_time: u32,
    pub to: Cell,
    pub end_time: u32,
    pub resting: Vec<bool>,
}

impl Leg {
    pub fn mover(&self) -> Mover<'_> {
        Mover::new(&self.shape, &self.agents)
    }

    /// Whether the leg is in force at `t`. Resting and idle legs last forever.
    pub fn covers(&self, t: u32) -> bool {
        let open_ended = self.kind == LegKind::Idle || self.resting.iter().any(|&r| r);
        t >= self.start_time && (t <= self.end_time || open_ended)
    }
}

/// Plans derived for one constraint-tree node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePlan {
    pub paths: Vec<Path>,
    /// Determined cost of each agent.
    pub costs: Vec<u32>,
    pub g: u64,
    /// Every slot of every task is assigned.
    pub complete: bool,
    pub legs: Vec<Leg>,
    /// Leg indices of each agent in time order.
    pub agent_legs: Vec<Vec<usize>>,
}

impl NodePlan {
    /// The leg in force for `agent` at `t`; the earlier one wins at a boundary.
    pub fn leg_at(&self, agent: usize, t: u32) -> Option<&Leg> {
        self.agent_legs[agent]
            .iter()
            .map(|&i| &self.legs[i])
            .find(|leg| leg.covers(t))
    }

    pub fn end_location(&self, agent: usize) -> Cell {
        self.paths[agent].last()
    }
}

type AgentConstraints = Vec<Vec<(Cell, u32)>>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct TaskKey {
    task: usize,
    members: Vec<usize>,
    origins: Vec<(Cell, u32)>,
    resting: Vec<bool>,
    constraints: AgentConstraints,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct PartialKey {
    agent: usize,
    origin: (Cell, u32),
    to: Cell,
    constraints: Vec<(Cell, u32)>,
}

/// Memo of leg plans shared between search nodes.
///
/// A leg depends only on its own members' constraints, so sibling and child
/// nodes reuse most of their parent's legs unchanged.
#[derive(Debug, Default)]
pub struct PlanCache {
    tasks: HashMap<TaskKey, Option<TaskPlan>>,
    partial: HashMap<PartialKey, Option<Trajectory>>,
}

impl PlanCache {
    /// Entries kept before the memo is flushed.
    pub const CAPACITY: usize = 100_000;

    pub fn len(&self) -> usize {
        self.tasks.len() + self.partial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn trim(&mut self) {
        if self.len() > Self::CAPACITY {
            self.tasks.clear();
            self.partial.clear();
        }
    }
}

struct Builder {
    vertices: Vec<Cell>,
    segments: Vec<Segment>,
}

impl Builder {
    fn push(&mut self, cells: &[Cell], start: u32, phase: Phase) {
        debug_assert_eq!(self.vertices.len() as u32 - 1, start);
        debug_assert_eq!(cells[0], *self.vertices.last().unwrap());
        self.vertices.extend_from_slice(&cells[1..]);
        self.segments.push(Segment {
            start,
            end: start + cells.len() as u32 - 1,
            phase,
        });
    }
}

/// Replans every agent's itinerary for the given assignments and constraints.
///
/// Fully staffed tasks run in dependency order, each agent continuing from
/// where its previous task left it. An agent whose latest slot belongs to a
/// task that is not fully staffed is planned only up to that slot. When all
/// tasks are staffed, agents must also be able to stay at their final cells.
/// Returns `None` when some leg is infeasible.
pub fn cost_so_far(
    inst: &Instance,
    assignments: &[Vec<SlotRef>],
    table: &ConstraintTable,
) -> Option<NodePlan> {
    cost_so_far_cached(inst, assignments, table, &mut PlanCache::default())
}

/// [`cost_so_far`] reusing leg plans from `cache`.
pub fn cost_so_far_cached(
    inst: &Instance,
    assignments: &[Vec<SlotRef>],
    table: &ConstraintTable,
    cache: &mut PlanCache,
) -> Option<NodePlan> {
    cache.trim();
    let n = inst.agent_count();
    let mut staff: Vec<Vec<Option<usize>>> =
        inst.tasks.iter().map(|t| vec![None; t.k()]).collect();
    for (a, list) in assignments.iter().enumerate() {
        for s in list {
            debug_assert!(staff[s.task][s.slot].is_none(), "slot {s} assigned twice");
            staff[s.task][s.slot] = Some(a);
        }
    }
    let full: Vec<bool> = staff.iter().map(|s| s.iter().all(Option::is_some)).collect();
    let complete = full.iter().all(|&f| f);

    let mut builders: Vec<Builder> = inst
        .agents
        .iter()
        .map(|a| Builder {
            vertices: vec![a.start],
            segments: Vec::new(),
        })
        .collect();
    let mut release: Vec<(Cell, u32)> = inst.agents.iter().map(|a| (a.start, 0)).collect();
    let mut next = vec![0usize; n];
    let mut costs = vec![0u32; n];
    let mut legs = Vec::new();
    let mut agent_legs = vec![Vec::new(); n];
    let mut done = vec![false; inst.tasks.len()];

    loop {
        let ready = (0..inst.tasks.len()).find(|&t| {
            full[t]
                && !done[t]
                && staff[t].iter().enumerate().all(|(slot, a)| {
                    let a = a.unwrap();
                    assignments[a].get(next[a]) == Some(&SlotRef::new(t, slot))
                })
        });
        let Some(t) = ready else { break };
        let task = &inst.tasks[t];
        let members: Vec<usize> = staff[t].iter().map(|a| a.unwrap()).collect();
        let origins: Vec<(Cell, u32)> = members.iter().map(|&a| release[a]).collect();
        let resting: Vec<bool> = members
            .iter()
            .map(|&a| complete && next[a] + 1 == assignments[a].len())
            .collect();
        let key = TaskKey {
            task: t,
            constraints: members.iter().map(|&a| table.of_agent(a)).collect(),
            members: members.clone(),
            origins: origins.clone(),
            resting: resting.clone(),
        };
        let plan = cache
            .tasks
            .entry(key)
            .or_insert_with(|| {
                plan_task_execution(&inst.map, task, &members, &origins, table, &resting).ok()
            })
            .clone()?;
        let done_at = plan.completion();
        for (slot, &a) in members.iter().enumerate() {
            let sref = SlotRef::new(t, slot);
            let (origin, t_rel) = origins[slot];
            builders[a].push(&plan.assembly[slot], t_rel, Phase::Assembly(sref));
            let cells: Vec<Cell> = plan
                .convoy
                .anchors
                .iter()
                .map(|r| r.shifted(task.shape()[slot]))
                .collect();
            builders[a].push(&cells, plan.t_sync, Phase::Convoy(t));
            agent_legs[a].push(legs.len());
            legs.push(Leg {
                kind: LegKind::Assembly(sref),
                agents: vec![a],
                shape: vec![Offset::ZERO],
                from: origin,
                start_time: t_rel,
                to: task.slot(slot),
                end_time: plan.t_sync,
                resting: vec![false],
            });
            release[a] = (task.goal(slot), done_at);
            costs[a] = done_at;
            next[a] += 1;
        }
        for &a in &members {
            agent_legs[a].push(legs.len());
        }
        legs.push(Leg {
            kind: LegKind::Convoy(t),
            agents: members.clone(),
            shape: task.shape().to_vec(),
            from: task.start_anchor(),
            start_time: plan.t_sync,
            to: task.goal_anchor(),
            end_time: done_at,
            resting,
        });
        done[t] = true;
    }
    if full.iter().zip(&done).any(|(&f, &d)| f && !d) {
        // Some staffed tasks wait on each other in a cycle.
        return None;
    }

    for a in 0..n {
        let list = &assignments[a];
        if list.is_empty() {
            let start = inst.agents[a].start;
            let ok = if complete {
                table.can_rest(a, start, 0)
            } else {
                !table.blocked(a, start, 0)
            };
            if !ok {
                return None;
            }
            builders[a].segments.push(Segment {
                start: 0,
                end: 0,
                phase: Phase::Idle,
            });
            agent_legs[a].push(legs.len());
            legs.push(Leg {
                kind: LegKind::Idle,
                agents: vec![a],
                shape: vec![Offset::ZERO],
                from: start,
                start_time: 0,
                to: start,
                end_time: 0,
                resting: vec![complete],
            });
            continue;
        }
        if next[a] == list.len() {
            continue;
        }
        // Only the latest slot may belong to a partially staffed task.
        if next[a] + 1 != list.len() || full[list[next[a]].task] {
            return None;
        }
        let sref = list[next[a]];
        let (origin, t_rel) = release[a];
        let id = [a];
        let to = inst.slot_cell(sref);
        let key = PartialKey {
            agent: a,
            origin: (origin, t_rel),
            to,
            constraints: table.of_agent(a),
        };
        let tr = cache
            .partial
            .entry(key)
            .or_insert_with(|| {
                unified_a_star(&inst.map, Mover::single(&id), origin, t_rel, to, table, &[false]).ok()
            })
            .clone()?;
        builders[a].push(&tr.anchors, t_rel, Phase::Assembly(sref));
        costs[a] = tr.arrival();
        agent_legs[a].push(legs.len());
        legs.push(Leg {
            kind: LegKind::Partial(sref),
            agents: vec![a],
            shape: vec![Offset::ZERO],
            from: origin,
            start_time: t_rel,
            to,
            end_time: tr.arrival(),
            resting: vec![false],
        });
    }

    let paths = builders
        .into_iter()
        .enumerate()
        .map(|(agent, b)| Path {
            agent,
            vertices: b.vertices,
            segments: b.segments,
        })
        .collect();
    Some(NodePlan {
        paths,
        g: costs.iter().map(|&c| c as u64).sum(),
        costs,
        complete,
        legs,
        agent_legs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AgentSpec, GridMap, TaskSpec};

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    fn instance() -> Instance {
        let agents = [c(0, 0), c(3, 0)]
            .into_iter()
            .enumerate()
            .map(|(id, start)| AgentSpec { id, start })
            .collect();
        let tasks = vec![
            TaskSpec::new(0, vec![c(1, 1), c(2, 1)], vec![c(0, 3), c(1, 3)]).unwrap(),
            TaskSpec::new(1, vec![c(3, 2)], vec![c(3, 3)]).unwrap(),
        ];
        Instance::new(GridMap::open(4, 4).unwrap(), agents, tasks).unwrap()
    }

    #[test]
    fn root_costs_nothing() {
        let inst = instance();
        let plan = cost_so_far(&inst, &[vec![], vec![]], &ConstraintTable::default()).unwrap();
        assert_eq!(plan.g, 0);
        assert!(!plan.complete);
        assert!(plan.paths.iter().all(|p| p.vertices.len() == 1));
    }

    #[test]
    fn partial_task_counts_only_the_slot_arrival() {
        let inst = instance();
        let plan = cost_so_far(
            &inst,
            &[vec![SlotRef::new(0, 0)], vec![]],
            &ConstraintTable::default(),
        )
        .unwrap();
        assert_eq!(plan.g, 2);
        assert_eq!(plan.costs, vec![2, 0]);
    }

    #[test]
    fn chained_itinerary_continues_from_the_previous_goal() {
        let inst = instance();
        let plan = cost_so_far(
            &inst,
            &[
                vec![SlotRef::new(0, 0)],
                vec![SlotRef::new(0, 1), SlotRef::new(1, 0)],
            ],
            &ConstraintTable::default(),
        )
        .unwrap();
        assert!(plan.complete);
        // Team syncs at t=2, reaches the goal row at t=5; agent 1 then walks
        // (1,3)->(3,2) and carries task 1 up one cell.
        assert_eq!(plan.costs[0], 5);
        assert_eq!(plan.costs[1], 5 + 3 + 1);
        for p in &plan.paths {
            p.check_structure(&inst.map).unwrap();
        }
    }

    #[test]
    fn slot_after_an_unstaffed_task_is_rejected() {
        let inst = instance();
        let out = cost_so_far(
            &inst,
            &[vec![SlotRef::new(0, 0), SlotRef::new(1, 0)], vec![]],
            &ConstraintTable::default(),
        );
        assert!(out.is_none());
    }
}
