//! Best-first search over the constraint tree.
//!
//! Each node fixes a partial slot assignment plus constraints. Nodes are
//! evaluated by replanning every itinerary, popped by `f = g + h`, and
//! expanded either by splitting their earliest conflict or, when
//! conflict-free, by assigning more slots.

mod expand;
mod heuristic;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::mem::size_of;
use std::time::{Duration, Instant};

use crate::conflict::{detect_first_conflict, resolve, Conflict, Resolver};
use crate::domain::{
    Cell, Constraint, ConstraintSet, Instance, Path, Segment, Solution, SolverStats, SlotRef,
    Status,
};
use crate::lowlevel::{cost_so_far_cached, ConstraintTable, NodePlan, PlanCache};
use crate::subopt::task_difficulty;

pub use expand::{complete_partial, open_new, Expansion, Step};
pub use heuristic::{assignment_estimate, heuristic, transport_estimate, Staffing};

/// Wall-clock and memory budget of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Limits {
    pub timeout: Option<Duration>,
    /// Cap on the estimated bytes held by open nodes and the closed list.
    pub mem_limit: Option<u64>,
}

impl Limits {
    pub fn unlimited() -> Self {
        Limits::default()
    }

    pub fn with_timeout(secs: f64) -> Self {
        Limits {
            timeout: Some(Duration::from_secs_f64(secs)),
            mem_limit: None,
        }
    }
}

/// Which task a selector layer opens next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskChoice {
    /// The task with the smallest difficulty.
    Best,
    /// The task with the largest difficulty.
    Worst,
}

/// Restrictions on task expansion used by the suboptimal variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pruning {
    #[default]
    None,
    /// Only one new task may be opened per step, picked by difficulty.
    Selector(TaskChoice),
    /// An agent may only join one of its `n` nearest unfinished tasks.
    Nearest(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub expansion: Expansion,
    pub resolver: Resolver,
    pub pruning: Pruning,
    pub limits: Limits,
}

impl SearchConfig {
    pub fn optimal(expansion: Expansion, resolver: Resolver, limits: Limits) -> Self {
        SearchConfig {
            expansion,
            resolver,
            pruning: Pruning::None,
            limits,
        }
    }
}

/// Canonical identity of a node: assignments in agent order and the sorted
/// constraint set.
pub type NodeKey = (Vec<Vec<SlotRef>>, Vec<Constraint>);

/// An evaluated constraint-tree node.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub assignments: Vec<Vec<SlotRef>>,
    pub constraints: ConstraintSet,
    pub plan: NodePlan,
    pub conflict: Option<Conflict>,
    pub g: u64,
    pub h: u64,
}

impl SearchNode {
    pub fn f(&self) -> u64 {
        self.g + self.h
    }

    pub fn is_goal(&self) -> bool {
        self.plan.complete && self.conflict.is_none()
    }

    pub fn key(&self) -> NodeKey {
        node_key(&self.assignments, &self.constraints)
    }

    fn approx_bytes(&self) -> u64 {
        let paths: usize = self
            .plan
            .paths
            .iter()
            .map(|p| {
                size_of::<Path>()
                    + p.vertices.len() * size_of::<Cell>()
                    + p.segments.len() * size_of::<Segment>()
            })
            .sum();
        let legs = self.plan.legs.len() * 128;
        (size_of::<SearchNode>() + paths + legs + key_bytes(&self.assignments, &self.constraints))
            as u64
    }
}

fn node_key(assignments: &[Vec<SlotRef>], constraints: &ConstraintSet) -> NodeKey {
    (assignments.to_vec(), constraints.iter().copied().collect())
}

fn key_bytes(assignments: &[Vec<SlotRef>], constraints: &ConstraintSet) -> usize {
    let slots: usize = assignments.iter().map(Vec::len).sum();
    size_of::<NodeKey>()
        + assignments.len() * size_of::<Vec<SlotRef>>()
        + slots * size_of::<SlotRef>()
        + constraints.len() * size_of::<Constraint>()
}

/// Hooks for instrumenting a search run.
pub trait SearchObserver {
    fn node_popped(&mut self, _node: &SearchNode) {}
    fn child_generated(&mut self, _parent: &SearchNode, _child: &SearchNode) {}
}

impl SearchObserver for () {}

/// A run that ended without a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveFailure {
    pub status: Status,
    pub stats: SolverStats,
}

pub type SolveOutcome = Result<Solution, SolveFailure>;

/// Evaluates the node with the given assignments and constraints; `None`
/// when some itinerary is infeasible.
pub fn evaluate(
    inst: &Instance,
    assignments: Vec<Vec<SlotRef>>,
    constraints: ConstraintSet,
) -> Option<SearchNode> {
    evaluate_cached(inst, assignments, constraints, &mut PlanCache::default())
}

/// [`evaluate`] reusing leg plans from `cache`.
pub fn evaluate_cached(
    inst: &Instance,
    assignments: Vec<Vec<SlotRef>>,
    constraints: ConstraintSet,
    cache: &mut PlanCache,
) -> Option<SearchNode> {
    let table = ConstraintTable::new(&constraints);
    let plan = cost_so_far_cached(inst, &assignments, &table, cache)?;
    let conflict = detect_first_conflict(inst, &plan.paths, plan.complete);
    let staffing = Staffing::new(inst, &assignments);
    let h = heuristic(inst, &staffing, &plan);
    Some(SearchNode {
        g: plan.g,
        h,
        assignments,
        constraints,
        plan,
        conflict,
    })
}

/// Optimal search with the given task expansion and conflict resolver.
pub fn solve_optimal(
    inst: &Instance,
    expansion: Expansion,
    resolver: Resolver,
    limits: Limits,
) -> SolveOutcome {
    search(inst, &SearchConfig::optimal(expansion, resolver, limits), &mut ())
}

struct Entry {
    f: u64,
    g: u64,
    seq: u64,
    node: Box<SearchNode>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Max-heap: smaller f first, then larger g, then earlier insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then(self.g.cmp(&other.g))
            .then(other.seq.cmp(&self.seq))
    }
}

/// The constraint-tree search, parameterised by expansion strategy,
/// resolver and pruning.
pub fn search(
    inst: &Instance,
    config: &SearchConfig,
    observer: &mut dyn SearchObserver,
) -> SolveOutcome {
    let started = Instant::now();
    let mut stats = SolverStats::default();
    let fail = |status: Status, mut stats: SolverStats| {
        stats.status = status;
        stats.runtime_ms = started.elapsed().as_millis() as u64;
        Err(SolveFailure { status, stats })
    };

    let mut open = BinaryHeap::new();
    let mut closed: HashSet<NodeKey> = HashSet::new();
    let mut used_bytes = 0u64;
    let mut seq = 0u64;
    let mut cache = PlanCache::default();

    let empty = vec![Vec::new(); inst.agent_count()];
    closed.insert(node_key(&empty, &ConstraintSet::new()));
    let Some(root) = evaluate_cached(inst, empty, ConstraintSet::new(), &mut cache) else {
        return fail(Status::Exhausted, stats);
    };
    stats.nodes_generated += 1;
    used_bytes += root.approx_bytes() + key_bytes(&root.assignments, &root.constraints) as u64;
    open.push(Entry {
        f: root.f(),
        g: root.g,
        seq,
        node: Box::new(root),
    });
    stats.peak_open_size = 1;
    if config.limits.mem_limit.is_some_and(|cap| used_bytes > cap) {
        return fail(Status::Memout, stats);
    }

    while let Some(Entry { node, .. }) = open.pop() {
        if config.limits.timeout.is_some_and(|t| started.elapsed() > t) {
            return fail(Status::Timeout, stats);
        }
        used_bytes -= node.approx_bytes();
        stats.nodes_popped += 1;
        observer.node_popped(&node);
        if node.is_goal() {
            stats.status = Status::Solved;
            stats.runtime_ms = started.elapsed().as_millis() as u64;
            return Ok(Solution {
                assignments: node.assignments.clone(),
                paths: node.plan.paths.clone(),
                soc: node.g,
                stats,
            });
        }

        let children: Vec<(Vec<Vec<SlotRef>>, ConstraintSet)> = match &node.conflict {
            Some(conflict) => {
                stats.conflict_expansions += 1;
                let table = ConstraintTable::new(&node.constraints);
                resolve(config.resolver, conflict, inst, &node.plan, &table)
                    .into_iter()
                    .map(|set| {
                        let mut cons = node.constraints.clone();
                        cons.extend(set);
                        (node.assignments.clone(), cons)
                    })
                    .collect()
            }
            None => {
                stats.task_expansions += 1;
                task_children(inst, &node, config)
                    .into_iter()
                    .map(|step| {
                        let mut assignments = node.assignments.clone();
                        for (a, s) in step {
                            assignments[a].push(s);
                        }
                        (assignments, node.constraints.clone())
                    })
                    .collect()
            }
        };

        for (assignments, constraints) in children {
            let key = node_key(&assignments, &constraints);
            if closed.contains(&key) {
                stats.duplicates_skipped += 1;
                continue;
            }
            used_bytes += key_bytes(&assignments, &constraints) as u64;
            closed.insert(key);
            let Some(child) = evaluate_cached(inst, assignments, constraints, &mut cache) else {
                continue;
            };
            stats.nodes_generated += 1;
            observer.child_generated(&node, &child);
            used_bytes += child.approx_bytes();
            seq += 1;
            open.push(Entry {
                f: child.f(),
                g: child.g,
                seq,
                node: Box::new(child),
            });
            stats.peak_open_size = stats.peak_open_size.max(open.len() as u64);
            if config.limits.mem_limit.is_some_and(|cap| used_bytes > cap) {
                return fail(Status::Memout, stats);
            }
        }
    }
    fail(Status::Exhausted, stats)
}

/// Task-expansion steps of a conflict-free node.
fn task_children(inst: &Instance, node: &SearchNode, config: &SearchConfig) -> Vec<Step> {
    let staffing = Staffing::new(inst, &node.assignments);
    let available = staffing.available_agents(inst.agent_count());
    let nearest = match config.pruning {
        Pruning::Nearest(n) => Some(nearest_tasks(inst, &staffing, &node.plan, n)),
        _ => None,
    };
    let allowed = |a: usize, task: usize| nearest.as_ref().is_none_or(|near| near[a].contains(&task));

    if let Some(open_task) = staffing.partial_tasks().next() {
        return complete_partial(open_task, &staffing.staff[open_task], &available, allowed);
    }
    let mut candidates: Vec<(usize, usize)> = staffing
        .unassigned_tasks()
        .map(|t| (t, inst.tasks[t].k()))
        .filter(|&(_, k)| k <= available.len())
        .collect();
    if let Pruning::Selector(choice) = config.pruning {
        let ends: Vec<(usize, Cell)> = available
            .iter()
            .map(|&a| (a, node.plan.end_location(a)))
            .collect();
        let scored = candidates.iter().filter_map(|&(t, k)| {
            task_difficulty(inst, t, &ends).ok().map(|d| (d.cost, t, k))
        });
        let pick = match choice {
            TaskChoice::Best => scored.min_by_key(|&(d, t, _)| (d, t)),
            TaskChoice::Worst => scored.max_by_key(|&(d, t, _)| (d, std::cmp::Reverse(t))),
        };
        candidates = pick.map(|(_, t, k)| vec![(t, k)]).unwrap_or_default();
    }
    open_new(config.expansion, &candidates, &available, allowed)
}

/// For each agent, its `n` nearest tasks that are not fully staffed, by
/// Manhattan distance from its end cell to the task's nearest slot.
fn nearest_tasks(inst: &Instance, staffing: &Staffing, plan: &NodePlan, n: usize) -> Vec<Vec<usize>> {
    (0..inst.agent_count())
        .map(|a| {
            let end = plan.end_location(a);
            let mut open: Vec<(u32, usize)> = (0..inst.tasks.len())
                .filter(|&t| !staffing.is_full(t))
                .map(|t| {
                    let d = inst.tasks[t].starts().iter().map(|s| s.manhattan(end)).min().unwrap();
                    (d, t)
                })
                .collect();
            open.sort();
            open.into_iter().take(n).map(|(_, t)| t).collect()
        })
        .collect()
}
