use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::{
    AgentSpec, Cell, GridMap, Instance, Path, Phase, Segment, Solution, SolverStats, SlotRef,
    Status, TaskSpec,
};
use crate::search::SolveOutcome;

use super::ScenError;

fn parse_err(line: usize, message: impl Into<String>) -> ScenError {
    ScenError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a MovingAI grid. The first grid row is the top of the map.
pub fn read_map(text: &str) -> Result<GridMap, ScenError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(0, format!("file ends before {what}")))
    };
    let (n, l) = next("the type line")?;
    if l.split_whitespace().next() != Some("type") {
        return Err(parse_err(n, "expected `type octile`"));
    }
    let mut dims = [0u32; 2];
    for (slot, key) in [(0, "height"), (1, "width")] {
        let (n, l) = next(key)?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(parse_err(n, format!("expected `{key} <n>`")));
        }
        dims[slot] = parts
            .next()
            .and_then(|v| v.parse().ok())
            .filter(|&v| v > 0)
            .ok_or_else(|| parse_err(n, format!("bad {key}")))?;
    }
    let [height, width] = dims;
    let (n, l) = next("the `map` line")?;
    if l != "map" {
        return Err(parse_err(n, "expected `map`"));
    }
    let mut blocked = Vec::new();
    for row in 0..height {
        let (n, l) = next("the last grid row")?;
        if l.chars().count() != width as usize {
            return Err(parse_err(n, format!("row has {} cells, expected {width}", l.chars().count())));
        }
        let y = (height - 1 - row) as i32;
        for (x, ch) in l.chars().enumerate() {
            match ch {
                '.' | 'G' => {}
                '@' | 'T' | 'O' => blocked.push(Cell::new(x as i32, y)),
                other => return Err(parse_err(n, format!("unknown terrain `{other}`"))),
            }
        }
    }
    for (n, l) in lines {
        if !l.is_empty() {
            return Err(parse_err(n, "trailing content after the grid"));
        }
    }
    Ok(GridMap::new(width, height, blocked)?)
}

pub fn write_map(map: &GridMap) -> String {
    let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", map.height(), map.width());
    for y in (0..map.height() as i32).rev() {
        for x in 0..map.width() as i32 {
            out.push(if map.is_passable(Cell::new(x, y)) { '.' } else { '@' });
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    agents: Vec<Cell>,
    tasks: Vec<TaskDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    k: usize,
    starts: Vec<Cell>,
    goals: Vec<Cell>,
}

/// Parses a scenario against its map.
pub fn read_scenario(map: GridMap, text: &str) -> Result<Instance, ScenError> {
    let doc: ScenarioDoc = serde_json::from_str(text)?;
    let agents = doc
        .agents
        .into_iter()
        .enumerate()
        .map(|(id, start)| AgentSpec { id, start })
        .collect();
    let tasks = doc
        .tasks
        .into_iter()
        .enumerate()
        .map(|(id, t)| {
            if t.starts.len() != t.k || t.goals.len() != t.k {
                return Err(ScenError::Field(format!(
                    "tasks[{id}]: k = {} but {} starts and {} goals",
                    t.k,
                    t.starts.len(),
                    t.goals.len()
                )));
            }
            Ok(TaskSpec::new(id, t.starts, t.goals)?)
        })
        .collect::<Result<_, _>>()?;
    Ok(Instance::new(map, agents, tasks)?)
}

pub fn write_scenario(inst: &Instance) -> String {
    let doc = ScenarioDoc {
        agents: inst.agents.iter().map(|a| a.start).collect(),
        tasks: inst
            .tasks
            .iter()
            .map(|t| TaskDoc {
                k: t.k(),
                starts: t.starts().to_vec(),
                goals: t.goals().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("scenario serializes") + "\n"
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDoc {
    pub start: u32,
    pub end: u32,
    pub phase: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub task: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathDoc {
    pub agent: usize,
    pub vertices: Vec<Cell>,
    pub segments: Vec<SegmentDoc>,
}

/// Contents of a `.sol.json` file. Failed runs carry only status and stats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub soc: Option<u64>,
    /// Per agent, `[task, slot]` pairs in execution order.
    pub assignments: Vec<Vec<(usize, usize)>>,
    pub paths: Vec<PathDoc>,
    pub stats: SolverStats,
}

impl SolutionDoc {
    pub fn from_outcome(outcome: &SolveOutcome) -> Self {
        match outcome {
            Ok(sol) => SolutionDoc {
                status: Status::Solved,
                soc: Some(sol.soc),
                assignments: sol
                    .assignments
                    .iter()
                    .map(|l| l.iter().map(|&s| s.into()).collect())
                    .collect(),
                paths: sol.paths.iter().map(path_doc).collect(),
                stats: sol.stats,
            },
            Err(fail) => SolutionDoc {
                status: fail.status,
                soc: None,
                assignments: Vec::new(),
                paths: Vec::new(),
                stats: fail.stats,
            },
        }
    }

    /// The plan, if the run solved the instance.
    pub fn to_solution(&self) -> Result<Option<Solution>, ScenError> {
        let Some(soc) = self.soc else {
            return Ok(None);
        };
        let paths = self
            .paths
            .iter()
            .map(|p| {
                let segments = p
                    .segments
                    .iter()
                    .map(|s| segment(p.agent, s))
                    .collect::<Result<_, _>>()?;
                Ok(Path {
                    agent: p.agent,
                    vertices: p.vertices.clone(),
                    segments,
                })
            })
            .collect::<Result<_, ScenError>>()?;
        Ok(Some(Solution {
            assignments: self
                .assignments
                .iter()
                .map(|l| l.iter().map(|&s| SlotRef::from(s)).collect())
                .collect(),
            paths,
            soc,
            stats: self.stats,
        }))
    }
}

fn path_doc(p: &Path) -> PathDoc {
    PathDoc {
        agent: p.agent,
        vertices: p.vertices.clone(),
        segments: p
            .segments
            .iter()
            .map(|s| {
                let (phase, task, slot) = match s.phase {
                    Phase::Idle => ("idle", None, None),
                    Phase::Assembly(r) => ("assembly", Some(r.task), Some(r.slot)),
                    Phase::Convoy(t) => ("convoy", Some(t), None),
                };
                SegmentDoc {
                    start: s.start,
                    end: s.end,
                    phase: phase.into(),
                    task,
                    slot,
                }
            })
            .collect(),
    }
}

fn segment(agent: usize, s: &SegmentDoc) -> Result<Segment, ScenError> {
    let missing = |field: &str| ScenError::Field(format!("paths[{agent}]: {} segment lacks `{field}`", s.phase));
    let phase = match s.phase.as_str() {
        "idle" => Phase::Idle,
        "assembly" => Phase::Assembly(SlotRef::new(
            s.task.ok_or_else(|| missing("task"))?,
            s.slot.ok_or_else(|| missing("slot"))?,
        )),
        "convoy" => Phase::Convoy(s.task.ok_or_else(|| missing("task"))?),
        other => {
            return Err(ScenError::Field(format!("paths[{agent}]: unknown phase `{other}`")));
        }
    };
    Ok(Segment {
        start: s.start,
        end: s.end,
        phase,
    })
}

/// Serializes a run outcome; identical outcomes give identical bytes.
pub fn solution_json(outcome: &SolveOutcome) -> String {
    let doc = SolutionDoc::from_outcome(outcome);
    let mut out = serde_json::to_string_pretty(&doc).expect("solution serializes");
    let _ = writeln!(out);
    out
}

pub fn read_solution(text: &str) -> Result<SolutionDoc, ScenError> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SolverStats;
    use crate::search::SolveFailure;

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn top_row_comes_first() {
        let map = read_map("type octile\nheight 2\nwidth 3\nmap\n...\n@.T\n").unwrap();
        assert!(!map.is_passable(c(0, 0)));
        assert!(!map.is_passable(c(2, 0)));
        assert!(map.is_passable(c(0, 1)));
        assert_eq!(read_map(&write_map(&map)).unwrap(), map);
    }

    #[test]
    fn map_errors_name_the_line() {
        let err = read_map("type octile\nheight 2\nwidth 3\nmap\n...\n.x.\n").unwrap_err();
        assert!(matches!(err, ScenError::Parse { line: 6, .. }), "{err}");
        let err = read_map("type octile\nheight 2\nwidth 3\nmap\n....\n").unwrap_err();
        assert!(matches!(err, ScenError::Parse { line: 5, .. }), "{err}");
        let err = read_map("type octile\nwidth 3\n").unwrap_err();
        assert!(matches!(err, ScenError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn scenario_fields_are_checked() {
        let map = GridMap::open(4, 4).unwrap();
        let text = r#"{"agents": [[0,0]], "tasks": [{"k": 2, "starts": [[1,1]], "goals": [[2,2]]}]}"#;
        assert!(matches!(read_scenario(map.clone(), text), Err(ScenError::Field(_))));
        let text = r#"{"agents": [[0,0]], "tasks": [], "extra": 1}"#;
        assert!(matches!(read_scenario(map, text), Err(ScenError::Json(_))));
    }

    #[test]
    fn failed_runs_keep_status_and_stats() {
        let stats = SolverStats {
            task_expansions: 4,
            status: Status::Timeout,
            ..SolverStats::default()
        };
        let outcome: SolveOutcome = Err(SolveFailure {
            status: Status::Timeout,
            stats,
        });
        let text = solution_json(&outcome);
        assert!(!text.contains("soc"));
        let doc = read_solution(&text).unwrap();
        assert_eq!(doc.status, Status::Timeout);
        assert_eq!(doc.stats.task_expansions, 4);
        assert_eq!(doc.to_solution().unwrap(), None);
    }
}
