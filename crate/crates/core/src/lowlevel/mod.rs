//! Space-time planning for single agents and rigid convoys under
//! per-agent constraints, synchronized task execution, and per-node
//! itinerary construction.

mod astar;
mod mdd;
mod node;
mod obstacles;
mod task;

use thiserror::Error;

use crate::domain::Cell;

pub use astar::{unified_a_star, DistanceMap};
pub use mdd::{build_mdd, Mdd, Reachability};
pub use node::{cost_so_far, cost_so_far_cached, Leg, LegKind, NodePlan, PlanCache};
pub use obstacles::{ConstraintTable, Mover, Obstacles, Unrestricted};
pub use task::{plan_task_execution, TaskPlan, TaskPlanError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("goal cannot be reached even without constraints")]
    Unreachable,
    #[error("no trajectory satisfies the constraints")]
    Infeasible,
    #[error("placement at {0} leaves the grid or covers a blocked cell")]
    InvalidPlacement(Cell),
}

/// Anchor positions from `start_time` on, one per timestep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub start_time: u32,
    pub anchors: Vec<Cell>,
}

impl Trajectory {
    pub fn arrival(&self) -> u32 {
        self.start_time + self.anchors.len() as u32 - 1
    }
}
