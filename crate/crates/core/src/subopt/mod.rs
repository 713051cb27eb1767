//! Suboptimal solvers: difficulty-driven task selection, nearest-task
//! pruning, and a prioritized-planning baseline.

mod greedy;
mod hungarian;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::conflict::Resolver;
use crate::domain::{Cell, Instance, Offset};
use crate::lowlevel::DistanceMap;
use crate::search::{
    search, Expansion, Limits, Pruning, SearchConfig, SolveOutcome, TaskChoice,
};

pub use greedy::{solve_greedy_pp, ReservationTable};
pub use hungarian::{hungarian_min_assign, AssignError, Assignment};

/// Stand-in travel time for a slot an agent cannot reach at all.
pub const UNREACHABLE_COST: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DifficultyError {
    #[error("task {task} needs {k} agents but only {available} are available")]
    TooFewAgents {
        task: usize,
        k: usize,
        available: usize,
    },
}

/// Agents against slots: travel time from the agent's end cell to the slot
/// plus the task's execution time, both ignoring other agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamCostMatrix {
    /// Agent ids, one per row.
    pub agents: Vec<usize>,
    pub entries: Vec<Vec<u64>>,
    pub execution: u64,
}

impl TeamCostMatrix {
    pub fn new(inst: &Instance, task: usize, agents: &[(usize, Cell)]) -> Self {
        let spec = &inst.tasks[task];
        let execution = DistanceMap::new(&inst.map, spec.shape(), spec.goal_anchor())
            .get(spec.start_anchor())
            .map_or(UNREACHABLE_COST, u64::from);
        let travel: Vec<DistanceMap> = spec
            .starts()
            .iter()
            .map(|&s| DistanceMap::new(&inst.map, &[Offset::ZERO], s))
            .collect();
        let entries = agents
            .iter()
            .map(|&(_, end)| {
                travel
                    .iter()
                    .map(|d| d.get(end).map_or(UNREACHABLE_COST, u64::from) + execution)
                    .collect()
            })
            .collect();
        TeamCostMatrix {
            agents: agents.iter().map(|&(a, _)| a).collect(),
            entries,
            execution,
        }
    }
}

/// Cheapest team for a task and its summed cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Difficulty {
    pub cost: u64,
    /// Agent per slot.
    pub team: Vec<usize>,
}

/// Minimum summed cost of staffing `task` from `agents` (id, end cell).
pub fn task_difficulty(
    inst: &Instance,
    task: usize,
    agents: &[(usize, Cell)],
) -> Result<Difficulty, DifficultyError> {
    let k = inst.tasks[task].k();
    if agents.len() < k {
        return Err(DifficultyError::TooFewAgents {
            task,
            k,
            available: agents.len(),
        });
    }
    let matrix = TeamCostMatrix::new(inst, task, agents);
    let best = hungarian_min_assign(&matrix.entries).expect("matrix is non-empty and tall");
    Ok(Difficulty {
        cost: best.total,
        team: best.col_to_row.iter().map(|&r| matrix.agents[r]).collect(),
    })
}

/// Solver family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Algorithm {
    #[default]
    Optimal,
    BestTask,
    WorstTask,
    Nearest1,
    Nearest2,
    GreedyPp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Optimal,
        Algorithm::BestTask,
        Algorithm::WorstTask,
        Algorithm::Nearest1,
        Algorithm::Nearest2,
        Algorithm::GreedyPp,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Algorithm::Optimal => "optimal",
            Algorithm::BestTask => "bt",
            Algorithm::WorstTask => "wt",
            Algorithm::Nearest1 => "nn1",
            Algorithm::Nearest2 => "nn2",
            Algorithm::GreedyPp => "greedy-pp",
        }
    }

    pub fn pruning(self) -> Pruning {
        match self {
            Algorithm::Optimal | Algorithm::GreedyPp => Pruning::None,
            Algorithm::BestTask => Pruning::Selector(TaskChoice::Best),
            Algorithm::WorstTask => Pruning::Selector(TaskChoice::Worst),
            Algorithm::Nearest1 => Pruning::Nearest(1),
            Algorithm::Nearest2 => Pruning::Nearest(2),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.token() == s)
            .ok_or_else(|| {
                format!("unknown algorithm `{s}` (expected optimal, bt, wt, nn1, nn2 or greedy-pp)")
            })
    }
}

/// Runs `algo`; expansion and resolver are ignored by the greedy baseline.
pub fn solve(
    inst: &Instance,
    algo: Algorithm,
    expansion: Expansion,
    resolver: Resolver,
    limits: Limits,
) -> SolveOutcome {
    match algo {
        Algorithm::GreedyPp => solve_greedy_pp(inst),
        _ => search(
            inst,
            &SearchConfig {
                expansion,
                resolver,
                pruning: algo.pruning(),
                limits,
            },
            &mut (),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AgentSpec, GridMap, TaskSpec};

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    fn inst(agents: &[Cell], tasks: Vec<TaskSpec>) -> Instance {
        let agents = agents
            .iter()
            .enumerate()
            .map(|(id, &start)| AgentSpec { id, start })
            .collect();
        Instance::new(GridMap::open(8, 8).unwrap(), agents, tasks).unwrap()
    }

    #[test]
    fn single_slot_difficulty_is_travel_plus_execution() {
        let task = TaskSpec::new(0, vec![c(1, 0)], vec![c(4, 0)]).unwrap();
        let i = inst(&[c(0, 0)], vec![task]);
        let d = task_difficulty(&i, 0, &[(0, c(0, 0))]).unwrap();
        assert_eq!(d.cost, 4);
        assert_eq!(d.team, vec![0]);
    }

    #[test]
    fn team_on_its_slots_pays_only_execution() {
        let task = TaskSpec::new(0, vec![c(0, 0), c(1, 0)], vec![c(0, 5), c(1, 5)]).unwrap();
        let i = inst(&[c(0, 0), c(1, 0)], vec![task]);
        let d = task_difficulty(&i, 0, &[(0, c(0, 0)), (1, c(1, 0))]).unwrap();
        assert_eq!(d.cost, 10);
    }

    #[test]
    fn difficulty_takes_the_cheaper_pairing() {
        let task = TaskSpec::new(0, vec![c(1, 4), c(1, 5)], vec![c(7, 4), c(7, 5)]).unwrap();
        let i = inst(&[c(0, 0), c(3, 6)], vec![task]);
        let agents = [(0, c(0, 0)), (1, c(3, 6))];
        let d = task_difficulty(&i, 0, &agents).unwrap();
        let exec = 6;
        let pair = |a: Cell, b: Cell| a.manhattan(c(1, 4)) + b.manhattan(c(1, 5)) + 2 * exec;
        let best = pair(c(0, 0), c(3, 6)).min(pair(c(3, 6), c(0, 0)));
        assert_eq!(d.cost, best as u64);
    }

    #[test]
    fn too_few_agents_is_an_error() {
        let task = TaskSpec::new(0, vec![c(0, 0), c(1, 0)], vec![c(0, 5), c(1, 5)]).unwrap();
        let i = inst(&[c(0, 0), c(1, 0)], vec![task]);
        assert_eq!(
            task_difficulty(&i, 0, &[(0, c(0, 0))]),
            Err(DifficultyError::TooFewAgents {
                task: 0,
                k: 2,
                available: 1
            })
        );
    }

    #[test]
    fn algorithm_tokens_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.token().parse::<Algorithm>(), Ok(a));
        }
        assert!("fast".parse::<Algorithm>().is_err());
    }
}
