use std::collections::HashMap;
use std::time::Instant;

use crate::domain::{
    Cell, Instance, Path, Phase, Segment, Solution, SolverStats, SlotRef, Status, TaskSpec,
};
use crate::lowlevel::{unified_a_star, DistanceMap, Mover, Obstacles, Reachability, TaskPlan};
use crate::search::{SolveFailure, SolveOutcome};

use super::task_difficulty;

/// Space-time occupancy of already committed paths. Each agent also holds
/// its final cell from the end of its path onward.
#[derive(Debug, Clone, Default)]
pub struct ReservationTable {
    cells: HashMap<(Cell, u32), usize>,
    tails: HashMap<Cell, (u32, usize)>,
    horizon: u32,
}

impl ReservationTable {
    pub fn from_paths<'a>(paths: impl IntoIterator<Item = (usize, &'a [Cell])>) -> Self {
        let mut table = ReservationTable::default();
        for (agent, cells) in paths {
            for (t, &c) in cells.iter().enumerate() {
                table.cells.insert((c, t as u32), agent);
            }
            let end = cells.len() as u32 - 1;
            table.tails.insert(cells[end as usize], (end, agent));
            table.horizon = table.horizon.max(end);
        }
        table
    }

    fn holder(&self, cell: Cell, t: u32) -> Option<usize> {
        self.cells.get(&(cell, t)).copied().or_else(|| {
            self.tails
                .get(&cell)
                .filter(|(from, _)| t >= *from)
                .map(|&(_, a)| a)
        })
    }
}

impl Obstacles for ReservationTable {
    fn blocked(&self, agent: usize, cell: Cell, t: u32) -> bool {
        self.holder(cell, t).is_some_and(|a| a != agent)
    }

    fn horizon(&self, _: usize) -> u32 {
        self.horizon + 1
    }

    fn can_rest(&self, agent: usize, cell: Cell, from: u32) -> bool {
        if self.tails.get(&cell).is_some_and(|&(_, a)| a != agent) {
            return false;
        }
        (from..=self.horizon).all(|t| !self.blocked(agent, cell, t))
    }
}

/// Reservations plus the timed cells of teammates planned earlier. Only
/// covers timesteps explicitly listed; teammates leave no tails.
struct WithTeam<'a> {
    base: &'a ReservationTable,
    team: HashMap<(Cell, u32), usize>,
}

impl Obstacles for WithTeam<'_> {
    fn blocked(&self, agent: usize, cell: Cell, t: u32) -> bool {
        self.base.blocked(agent, cell, t) || self.team.get(&(cell, t)).is_some_and(|&a| a != agent)
    }

    fn horizon(&self, agent: usize) -> u32 {
        let own = self.team.keys().map(|&(_, t)| t + 1).max().unwrap_or(0);
        self.base.horizon(agent).max(own)
    }

    fn can_rest(&self, agent: usize, cell: Cell, from: u32) -> bool {
        self.base.can_rest(agent, cell, from)
            && !self.team.iter().any(|(&(c, t), &a)| c == cell && t >= from && a != agent)
    }
}

/// Plans a staffed task one member at a time: each member's route to its
/// slot avoids the routes of lower slots, then the convoy leaves at the
/// common sync time. Sync times are scanned like the optimal planner does.
fn plan_team(
    inst: &Instance,
    spec: &TaskSpec,
    team: &[usize],
    origins: &[(Cell, u32)],
    history: &[Vec<Cell>],
    base: &ReservationTable,
) -> Option<TaskPlan> {
    let map = &inst.map;
    let (from, to) = (spec.start_anchor(), spec.goal_anchor());
    let span = DistanceMap::new(map, spec.shape(), to).get(from)?;
    let t_min = origins
        .iter()
        .enumerate()
        .map(|(slot, &(o, release))| release + o.manhattan(spec.slot(slot)))
        .max()?;
    let settle = base.horizon(usize::MAX).max(t_min) + (team.len() as u32 + 1) * map.passable_count() as u32;
    let resting = vec![true; team.len()];
    let convoy = Mover::new(spec.shape(), team);

    let mut best: Option<TaskPlan> = None;
    'sync: for t in t_min..=settle {
        if best.as_ref().is_some_and(|b| t + span >= b.completion()) {
            break;
        }
        // Teammates are where their earlier work left them until released.
        let mut obs = WithTeam {
            base,
            team: HashMap::new(),
        };
        for (&a, &(_, release)) in team.iter().zip(origins) {
            for (tt, &c) in history[a].iter().enumerate().take(release as usize) {
                obs.team.insert((c, tt as u32), a);
            }
        }
        let mut assembly = Vec::with_capacity(team.len());
        for (slot, (&a, &(origin, release))) in team.iter().zip(origins).enumerate() {
            let id = [a];
            let mover = Mover::single(&id);
            let mut reach = Reachability::new(map, mover, origin, release, &obs);
            reach.extend_to(map, mover, &obs, t);
            let Some(route) = reach.trace_back(map, spec.slot(slot), t) else {
                continue 'sync;
            };
            for (i, &c) in route.iter().enumerate() {
                obs.team.insert((c, release + i as u32), a);
            }
            assembly.push(route);
        }
        if let Ok(tr) = unified_a_star(map, convoy, from, t, to, base, &resting) {
            if best.as_ref().is_none_or(|b| tr.arrival() < b.completion()) {
                best = Some(TaskPlan {
                    t_sync: t,
                    assembly,
                    convoy: tr,
                });
            }
        }
    }
    best
}

/// Prioritized planning: repeatedly staffs the easiest remaining task with
/// its cheapest team and plans it against everything committed so far. Never
/// backtracks, so it can get stuck.
pub fn solve_greedy_pp(inst: &Instance) -> SolveOutcome {
    let started = Instant::now();
    let n = inst.agent_count();
    let mut vertices: Vec<Vec<Cell>> = inst.agents.iter().map(|a| vec![a.start]).collect();
    let mut segments: Vec<Vec<Segment>> = vec![Vec::new(); n];
    let mut assignments: Vec<Vec<SlotRef>> = vec![Vec::new(); n];
    let mut remaining: Vec<usize> = (0..inst.tasks.len()).collect();
    let mut stats = SolverStats::default();

    while !remaining.is_empty() {
        let ends: Vec<(usize, Cell)> = (0..n).map(|a| (a, *vertices[a].last().unwrap())).collect();
        let (task, team) = remaining
            .iter()
            .filter_map(|&t| task_difficulty(inst, t, &ends).ok().map(|d| (d.cost, t, d.team)))
            .min_by_key(|(cost, t, _)| (*cost, *t))
            .map(|(_, t, team)| (t, team))
            .expect("every task fits the agent pool");
        stats.task_expansions += 1;

        let others = (0..n)
            .filter(|a| !team.contains(a))
            .map(|a| (a, vertices[a].as_slice()));
        let table = ReservationTable::from_paths(others);
        let origins: Vec<(Cell, u32)> = team
            .iter()
            .map(|&a| (*vertices[a].last().unwrap(), vertices[a].len() as u32 - 1))
            .collect();
        let spec = &inst.tasks[task];
        let Some(plan) = plan_team(inst, spec, &team, &origins, &vertices, &table) else {
            stats.status = Status::Stuck;
            stats.runtime_ms = started.elapsed().as_millis() as u64;
            return Err(SolveFailure {
                status: Status::Stuck,
                stats,
            });
        };
        stats.nodes_generated += 1;
        for (slot, &a) in team.iter().enumerate() {
            let sref = SlotRef::new(task, slot);
            let release = origins[slot].1;
            vertices[a].extend_from_slice(&plan.assembly[slot][1..]);
            segments[a].push(Segment {
                start: release,
                end: plan.t_sync,
                phase: Phase::Assembly(sref),
            });
            vertices[a].extend(
                plan.convoy.anchors[1..]
                    .iter()
                    .map(|r| r.shifted(spec.shape()[slot])),
            );
            segments[a].push(Segment {
                start: plan.t_sync,
                end: plan.completion(),
                phase: Phase::Convoy(task),
            });
            assignments[a].push(sref);
        }
        remaining.retain(|&t| t != task);
    }

    let paths: Vec<Path> = vertices
        .into_iter()
        .zip(segments)
        .enumerate()
        .map(|(agent, (vertices, mut segments))| {
            if segments.is_empty() {
                segments.push(Segment {
                    start: 0,
                    end: 0,
                    phase: Phase::Idle,
                });
            }
            Path {
                agent,
                vertices,
                segments,
            }
        })
        .collect();
    let soc = paths.iter().map(|p| p.completion_time() as u64).sum();
    stats.status = Status::Solved;
    stats.runtime_ms = started.elapsed().as_millis() as u64;
    Ok(Solution {
        assignments,
        paths,
        soc,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AgentSpec, GridMap, TaskSpec};

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn reservations_block_others_and_keep_tails() {
        let path = [c(0, 0), c(1, 0), c(2, 0)];
        let table = ReservationTable::from_paths([(0, &path[..])]);
        assert!(table.blocked(1, c(1, 0), 1));
        assert!(!table.blocked(0, c(1, 0), 1));
        assert!(!table.blocked(1, c(1, 0), 2));
        assert!(table.blocked(1, c(2, 0), 50));
        assert!(!table.can_rest(1, c(2, 0), 0));
        assert!(table.can_rest(1, c(1, 0), 2));
        assert!(!table.can_rest(1, c(1, 0), 1));
    }

    #[test]
    fn single_task_single_agent_matches_the_direct_route() {
        let agents = vec![AgentSpec { id: 0, start: c(0, 0) }];
        let tasks = vec![TaskSpec::new(0, vec![c(2, 0)], vec![c(2, 3)]).unwrap()];
        let inst = Instance::new(GridMap::open(5, 5).unwrap(), agents, tasks).unwrap();
        let sol = solve_greedy_pp(&inst).unwrap();
        assert_eq!(sol.soc, 5);
        assert_eq!(sol.assignments, vec![vec![SlotRef::new(0, 0)]]);
    }

    #[test]
    fn idle_agent_on_the_goal_gets_greedy_stuck() {
        // The agent already on the slot is the cheapest team, but an agent
        // that never moves occupies the goal cell.
        let agents = vec![
            AgentSpec { id: 0, start: c(0, 0) },
            AgentSpec { id: 1, start: c(2, 0) },
        ];
        let tasks = vec![TaskSpec::new(0, vec![c(0, 0)], vec![c(2, 0)]).unwrap()];
        let inst = Instance::new(GridMap::open(3, 2).unwrap(), agents, tasks).unwrap();
        let err = solve_greedy_pp(&inst).unwrap_err();
        assert_eq!(err.status, Status::Stuck);
        assert_eq!(err.stats.task_expansions, 1);
    }
}
