//! Generalized vertex conflicts between entities and the constraint splits
//! that resolve them.
//!
//! All agents occupy single cells, so two entities conflict exactly when two
//! of their members share a cell. Constraints always name a member agent and
//! the cell it must avoid; inside a convoy leg the planner translates them to
//! forbidden anchors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::domain::{Cell, Constraint, Entity, Instance, Path, Phase};
use crate::lowlevel::{build_mdd, ConstraintTable, LegKind, NodePlan, Obstacles};

/// Footprint overlap of two entities at one timestep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    /// The entity with the smaller reference agent.
    pub a: Entity,
    pub b: Entity,
    pub anchor_a: Cell,
    pub anchor_b: Cell,
    pub t: u32,
    /// Shared cells, sorted by `(x, y)`.
    pub overlap: Vec<Cell>,
}

impl Conflict {
    /// Smallest shared cell.
    pub fn point(&self) -> Cell {
        self.overlap[0]
    }

    /// Members of `a` and `b` standing on the point.
    pub fn colliding_agents(&self) -> (usize, usize) {
        let p = self.point();
        (
            self.a.member_at(self.anchor_a, p).unwrap(),
            self.b.member_at(self.anchor_b, p).unwrap(),
        )
    }
}

/// Slot `p`'s agent holds in `task`'s convoy at `t`. Unlike
/// [`Path::convoy_at`] this also sees a convoy that forms at the very step
/// the agent's previous convoy finishes.
fn convoy_slot(p: &Path, task: usize, t: u32) -> Option<usize> {
    let i = p
        .segments
        .iter()
        .position(|s| s.start <= t && t <= s.end && s.phase == Phase::Convoy(task))?;
    p.segments[..i].iter().rev().find_map(|s| match s.phase {
        Phase::Assembly(r) if r.task == task => Some(r.slot),
        _ => None,
    })
}

/// The entity `agent` belongs to at `t`, and that entity's anchor.
fn entity_at(inst: &Instance, paths: &[Path], agent: usize, t: u32) -> (Entity, Cell) {
    let Some(own) = paths[agent].convoy_at(t) else {
        return (Entity::single(agent), paths[agent].at(t));
    };
    let task = &inst.tasks[own.task];
    let mut members = vec![usize::MAX; task.k()];
    for p in paths {
        if p.end_time() < t {
            continue;
        }
        if let Some(slot) = convoy_slot(p, own.task, t) {
            members[slot] = p.agent;
        }
    }
    debug_assert!(members.iter().all(|&m| m != usize::MAX));
    let anchor = paths[members[0]].at(t);
    (Entity::convoy(task, members), anchor)
}

/// Earliest generalized vertex conflict, ties broken by the smallest pair of
/// reference agents.
///
/// With `padded`, agents rest at their final vertices after their paths end
/// and every timestep up to the longest path is checked. Without it, an agent
/// only takes part while its path lasts.
pub fn detect_first_conflict(inst: &Instance, paths: &[Path], padded: bool) -> Option<Conflict> {
    let horizon = paths.iter().map(Path::end_time).max().unwrap_or(0);
    for t in 0..=horizon {
        let mut at: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
        for p in paths {
            if padded || p.end_time() >= t {
                at.entry(p.at(t)).or_default().push(p.agent);
            }
        }
        let mut best: Option<((usize, usize), Conflict)> = None;
        for agents in at.values().filter(|v| v.len() > 1) {
            for (i, &u) in agents.iter().enumerate() {
                for &v in &agents[i + 1..] {
                    let (eu, au) = entity_at(inst, paths, u, t);
                    let (ev, av) = entity_at(inst, paths, v, t);
                    let (ru, rv) = (eu.reference_agent(), ev.reference_agent());
                    let key = (ru.min(rv), ru.max(rv));
                    if best.as_ref().is_some_and(|(k, _)| *k <= key) {
                        continue;
                    }
                    let ((a, anchor_a), (b, anchor_b)) = if ru < rv {
                        ((eu, au), (ev, av))
                    } else {
                        ((ev, av), (eu, au))
                    };
                    // An agent finishing one convoy as it forms the next is
                    // in both entities; only cells held by two different
                    // agents count.
                    let mut overlap: Vec<Cell> = a
                        .footprint(anchor_a)
                        .into_iter()
                        .filter(|&c| {
                            b.member_at(anchor_b, c)
                                .is_some_and(|m| Some(m) != a.member_at(anchor_a, c))
                        })
                        .collect();
                    overlap.sort();
                    best = Some((
                        key,
                        Conflict {
                            a,
                            b,
                            anchor_a,
                            anchor_b,
                            t,
                            overlap,
                        },
                    ));
                }
            }
        }
        if let Some((_, c)) = best {
            return Some(c);
        }
    }
    None
}

/// Conflict resolution strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolver {
    Normal,
    Asym,
    Sym,
    Max1,
    Max2,
}

impl Resolver {
    pub const ALL: [Resolver; 5] = [
        Resolver::Normal,
        Resolver::Asym,
        Resolver::Sym,
        Resolver::Max1,
        Resolver::Max2,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Resolver::Normal => "normal",
            Resolver::Asym => "asym",
            Resolver::Sym => "sym",
            Resolver::Max1 => "max1",
            Resolver::Max2 => "max2",
        }
    }
}

impl fmt::Display for Resolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Resolver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Resolver::ALL
            .into_iter()
            .find(|r| r.token() == s)
            .ok_or_else(|| format!("unknown resolver `{s}` (expected normal, asym, sym, max1 or max2)"))
    }
}

/// Constraint sets for the two children of a conflict node.
pub type Split = [Vec<Constraint>; 2];

/// Every member of `entity` not shared with `other`, kept off `p`.
fn all_at(entity: &Entity, other: &Entity, p: Cell, t: u32) -> Vec<Constraint> {
    entity
        .members
        .iter()
        .filter(|m| !other.members.contains(m))
        .map(|&m| Constraint::new(m, p, t))
        .collect()
}

/// One constraint per child: the two members standing on the shared point.
pub fn split_normal(c: &Conflict) -> Split {
    let (x, y) = c.colliding_agents();
    let p = c.point();
    [vec![Constraint::new(x, p, c.t)], vec![Constraint::new(y, p, c.t)]]
}

/// `a`'s member keeps off the point in one child; in the other every member
/// of `b` does.
pub fn split_asym(c: &Conflict) -> Split {
    let (x, _) = c.colliding_agents();
    let p = c.point();
    [vec![Constraint::new(x, p, c.t)], all_at(&c.b, &c.a, p, c.t)]
}

/// Every member of one entity keeps off the shared point.
pub fn split_sym(c: &Conflict) -> Split {
    split_sym_at(c, c.point())
}

fn split_sym_at(c: &Conflict, p: Cell) -> Split {
    [all_at(&c.a, &c.b, p, c.t), all_at(&c.b, &c.a, p, c.t)]
}

/// Candidate splits considered by the lookahead resolver, in order.
pub fn max_candidates(c: &Conflict) -> Vec<Split> {
    let (_, y) = c.colliding_agents();
    let p = c.point();
    let mut out = vec![
        split_normal(c),
        split_asym(c),
        [all_at(&c.a, &c.b, p, c.t), vec![Constraint::new(y, p, c.t)]],
    ];
    out.extend(c.overlap.iter().map(|&q| split_sym_at(c, q)));
    out
}

/// Cost increase, capped at `d + 1`, of the legs touched by `extra`.
pub fn constraint_weight(
    inst: &Instance,
    plan: &NodePlan,
    table: &ConstraintTable,
    extra: &[Constraint],
    d: u32,
) -> u32 {
    let table = table.with(extra);
    let mut legs: Vec<usize> = Vec::new();
    for con in extra {
        let idx = plan.agent_legs[con.agent]
            .iter()
            .copied()
            .find(|&i| plan.legs[i].covers(con.t));
        if let Some(i) = idx {
            if !legs.contains(&i) {
                legs.push(i);
            }
        }
    }
    legs.iter()
        .map(|&i| {
            let leg = &plan.legs[i];
            if leg.kind == LegKind::Idle {
                let a = leg.agents[0];
                let ok = if leg.resting[0] {
                    table.can_rest(a, leg.from, 0)
                } else {
                    !table.blocked(a, leg.from, 0)
                };
                return if ok { 0 } else { d + 1 };
            }
            (0..=d)
                .find(|&delta| {
                    !build_mdd(
                        &inst.map,
                        leg.mover(),
                        leg.from,
                        leg.start_time,
                        leg.to,
                        leg.end_time + delta,
                        &table,
                        &leg.resting,
                    )
                    .is_empty()
                })
                .unwrap_or(d + 1)
        })
        .max()
        .unwrap_or(0)
}

/// Picks the candidate split whose cheaper child is most expensive, judged by
/// MDD lookahead of depth `d`. Ties go to the earlier candidate.
pub fn split_max(
    c: &Conflict,
    inst: &Instance,
    plan: &NodePlan,
    table: &ConstraintTable,
    d: u32,
) -> Split {
    let mut best: Option<(u32, Split)> = None;
    for cand in max_candidates(c) {
        let w = cand
            .iter()
            .map(|set| constraint_weight(inst, plan, table, set, d))
            .min()
            .unwrap();
        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
            best = Some((w, cand));
        }
    }
    best.unwrap().1
}

/// Applies `resolver` to `c`.
pub fn resolve(
    resolver: Resolver,
    c: &Conflict,
    inst: &Instance,
    plan: &NodePlan,
    table: &ConstraintTable,
) -> Split {
    match resolver {
        Resolver::Normal => split_normal(c),
        Resolver::Asym => split_asym(c),
        Resolver::Sym => split_sym(c),
        Resolver::Max1 => split_max(c, inst, plan, table, 1),
        Resolver::Max2 => split_max(c, inst, plan, table, 2),
    }
}
