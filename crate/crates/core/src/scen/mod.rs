//! Instance generators for three scenario families, and the map, scenario
//! and solution file formats.

mod gen;
mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::domain::DomainError;

pub use gen::{
    family_weights, generate, generate_sized, polyominoes, route_box, sample_shape, Axis,
    BoundingBox, ScenRng, Side, REJECTION_BUDGET,
};
pub use io::{
    read_map, read_scenario, read_solution, solution_json, write_map, write_scenario,
    PathDoc, SegmentDoc, SolutionDoc,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Family {
    /// Uniform placement everywhere.
    #[default]
    Random,
    /// Task starts drawn toward the top-right corner, goals toward the
    /// bottom-left, agents toward the two other corners.
    Spatial,
    /// Every task after the first crosses the first task's route.
    CollisionRich,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Random, Family::Spatial, Family::CollisionRich];

    pub fn token(self) -> &'static str {
        match self {
            Family::Random => "random",
            Family::Spatial => "spatial",
            Family::CollisionRich => "collision-rich",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.token() == s)
            .ok_or_else(|| format!("unknown scenario family `{s}` (expected random, spatial or collision-rich)"))
    }
}

#[derive(Debug, Error)]
pub enum ScenError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("rejection budget exhausted during {0}")]
    Exhausted(&'static str),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Field(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub family: Family,
    pub width: u32,
    pub height: u32,
    /// Fraction of cells turned into obstacles, in `[0, 1)`.
    pub obstacle_density: f64,
    /// Number of tasks per team size `k`.
    pub task_type_counts: BTreeMap<usize, usize>,
    pub agent_count: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Team sizes in generation order, interleaved by the deficit rule.
    pub fn task_sizes(&self) -> Vec<usize> {
        crate::bench::interleave(&self.task_type_counts)
    }

    fn check(&self, sizes: &[usize]) -> Result<(), ScenError> {
        if self.width == 0 || self.height == 0 {
            return Err(ScenError::Config("grid must be at least 1x1".into()));
        }
        if !(0.0..1.0).contains(&self.obstacle_density) {
            return Err(ScenError::Config(format!(
                "obstacle density {} is outside [0, 1)",
                self.obstacle_density
            )));
        }
        if sizes.contains(&0) {
            return Err(ScenError::Config("tasks need at least one agent".into()));
        }
        let max_k = sizes.iter().copied().max().unwrap_or(0);
        if self.agent_count < max_k {
            return Err(ScenError::Config(format!(
                "{} agents cannot staff a task of size {max_k}",
                self.agent_count
            )));
        }
        Ok(())
    }
}
