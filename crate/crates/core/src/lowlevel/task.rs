use thiserror::Error;

use crate::domain::{Cell, GridMap, TaskSpec};

use super::astar::{unified_a_star, DistanceMap};
use super::mdd::Reachability;
use super::obstacles::{Mover, Obstacles};
use super::{PlanError, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TaskPlanError {
    #[error("agent {agent} cannot reach slot {slot} under its constraints")]
    Assembly { slot: usize, agent: usize },
    #[error("convoy leg failed: {0}")]
    Convoy(PlanError),
}

/// Synchronized execution of one fully staffed task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskPlan {
    pub t_sync: u32,
    /// Per member, its cells from its release time through `t_sync`.
    pub assembly: Vec<Vec<Cell>>,
    pub convoy: Trajectory,
}

impl TaskPlan {
    pub fn completion(&self) -> u32 {
        self.convoy.arrival()
    }
}

/// Plans assembly, synchronization and convoy transport for `task`.
///
/// `members[i]` fills slot `i` and is released at `origins[i]`. Each member
/// travels to its slot and waits there; the convoy forms at `t_sync` and moves
/// to the goal configuration. Without restrictions `t_sync` is the latest
/// member arrival. Under restrictions a later `t_sync` can finish earlier, so
/// candidates are scanned until no later one can beat the best completion.
pub fn plan_task_execution(
    map: &GridMap,
    task: &TaskSpec,
    members: &[usize],
    origins: &[(Cell, u32)],
    obs: &dyn Obstacles,
    resting: &[bool],
) -> Result<TaskPlan, TaskPlanError> {
    debug_assert_eq!(members.len(), task.k());
    debug_assert_eq!(origins.len(), task.k());
    let passable = map.passable_count() as u32;
    let ids: Vec<[usize; 1]> = members.iter().map(|&a| [a]).collect();

    let mut reach = Vec::with_capacity(members.len());
    let mut t0 = 0;
    let mut settle = 0;
    for (slot, (&(origin, release), id)) in origins.iter().zip(&ids).enumerate() {
        let mover = Mover::single(id);
        let limit = obs.horizon(id[0]).max(release) + passable + 1;
        settle = settle.max(limit);
        let mut r = Reachability::new(map, mover, origin, release, obs);
        let arrival = r
            .earliest(map, mover, obs, task.slot(slot), limit)
            .ok_or(TaskPlanError::Assembly {
                slot,
                agent: members[slot],
            })?;
        t0 = t0.max(arrival);
        reach.push(r);
    }

    let convoy = Mover::new(task.shape(), members);
    let (from, to) = (task.start_anchor(), task.goal_anchor());
    let span = DistanceMap::new(map, task.shape(), to)
        .get(from)
        .ok_or(TaskPlanError::Convoy(PlanError::Unreachable))?;

    let mut best: Option<(u32, Trajectory)> = None;
    let mut t = t0;
    while t <= settle {
        if best.as_ref().is_some_and(|(_, b)| t + span >= b.arrival()) {
            break;
        }
        let ready = reach.iter_mut().enumerate().all(|(slot, r)| {
            let mover = Mover::single(&ids[slot]);
            r.extend_to(map, mover, obs, t);
            r.contains(map, task.slot(slot), t)
        });
        if ready {
            if let Ok(tr) = unified_a_star(map, convoy, from, t, to, obs, resting) {
                if best.as_ref().is_none_or(|(_, b)| tr.arrival() < b.arrival()) {
                    best = Some((t, tr));
                }
            }
        }
        t += 1;
    }
    let (t_sync, convoy) = best.ok_or(TaskPlanError::Convoy(PlanError::Infeasible))?;
    let assembly = reach
        .iter()
        .enumerate()
        .map(|(slot, r)| {
            r.trace_back(map, task.slot(slot), t_sync)
                .expect("slot reachable at t_sync")
        })
        .collect();
    Ok(TaskPlan {
        t_sync,
        assembly,
        convoy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Constraint;
    use crate::lowlevel::{ConstraintTable, Unrestricted};

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    fn pair_task() -> TaskSpec {
        TaskSpec::new(0, vec![c(1, 4), c(1, 5)], vec![c(7, 4), c(7, 5)]).unwrap()
    }

    #[test]
    fn single_member_task_syncs_on_arrival() {
        let map = GridMap::open(8, 8).unwrap();
        let task = TaskSpec::new(0, vec![c(6, 1)], vec![c(3, 4)]).unwrap();
        let plan =
            plan_task_execution(&map, &task, &[2], &[(c(7, 2), 0)], &Unrestricted, &[true])
                .unwrap();
        assert_eq!(plan.t_sync, 2);
        assert_eq!(plan.completion(), 8);
    }

    #[test]
    fn early_member_waits_on_its_slot() {
        let map = GridMap::open(8, 8).unwrap();
        let plan = plan_task_execution(
            &map,
            &pair_task(),
            &[1, 0],
            &[(c(3, 6), 0), (c(0, 0), 0)],
            &Unrestricted,
            &[false, false],
        )
        .unwrap();
        // (3,6)->(1,4) takes 4, (0,0)->(1,5) takes 6.
        assert_eq!(plan.t_sync, 6);
        assert_eq!(plan.completion(), 12);
        let early = &plan.assembly[0];
        assert_eq!(early.len(), 7);
        assert!(early[4..].iter().all(|&v| v == c(1, 4)));
    }

    #[test]
    fn constrained_convoy_step_costs_one_wait() {
        let map = GridMap::open(4, 2).unwrap();
        let task = TaskSpec::new(0, vec![c(0, 0), c(0, 1)], vec![c(3, 0), c(3, 1)]).unwrap();
        let table = ConstraintTable::new(&[Constraint::new(0, c(1, 0), 1)]);
        let plan = plan_task_execution(
            &map,
            &task,
            &[0, 1],
            &[(c(0, 0), 0), (c(0, 1), 0)],
            &table,
            &[false, false],
        )
        .unwrap();
        assert_eq!(plan.completion(), 4);
    }

    #[test]
    fn unreachable_slot_names_the_member() {
        let map = GridMap::new(3, 3, [c(1, 0), c(1, 1), c(1, 2)]).unwrap();
        let task = TaskSpec::new(0, vec![c(2, 0)], vec![c(2, 2)]).unwrap();
        let err = plan_task_execution(&map, &task, &[5], &[(c(0, 0), 0)], &Unrestricted, &[false])
            .unwrap_err();
        assert_eq!(err, TaskPlanError::Assembly { slot: 0, agent: 5 });
    }
}
