use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::domain::{Cell, Instance, Path, Phase, Solution, SlotRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Wrong number of paths, or a path filed under the wrong agent.
    PathCount,
    EmptyPath,
    WrongStart,
    /// A step longer than one cell.
    Teleport,
    Impassable,
    /// Segments that leave gaps, overlap, or run past the path.
    Segments,
    /// A slot with zero or several agents, or one that does not exist.
    Coverage,
    /// Assignment list disagrees with the assembly segments.
    Assignment,
    /// Member not on its slot when the convoy forms.
    NotOnSlot,
    /// Members that do not start and stop their convoy together.
    Unsynchronized,
    Rigidity,
    /// Convoy that stops somewhere other than its goal placement.
    MissedGoal,
    /// Path that keeps going after the agent's last task.
    Trailing,
    VertexConflict,
    SocMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub agent: Option<usize>,
    pub t: Option<u32>,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(a) = self.agent {
            write!(f, " agent {a}")?;
        }
        if let Some(t) = self.t {
            write!(f, " t={t}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

struct Report(Vec<Violation>);

impl Report {
    fn add(&mut self, agent: Option<usize>, t: Option<u32>, kind: ViolationKind, detail: String) {
        self.0.push(Violation { agent, t, kind, detail });
    }
}

fn cell_at(p: &Path, t: u32) -> Cell {
    p.vertices[(t as usize).min(p.vertices.len() - 1)]
}

/// Checks a solution against the instance from first principles.
///
/// Agents stay on their last cell forever. An empty result means the
/// solution is valid; the reported cost must equal the summed completion
/// times.
pub fn validate(inst: &Instance, sol: &Solution) -> Vec<Violation> {
    use ViolationKind::*;
    let mut r = Report(Vec::new());
    let n = inst.agent_count();
    if sol.paths.len() != n || sol.assignments.len() != n {
        r.add(
            None,
            None,
            PathCount,
            format!("{n} agents, {} paths, {} assignment lists", sol.paths.len(), sol.assignments.len()),
        );
        return r.0;
    }

    let mut usable = vec![true; n];
    for (a, p) in sol.paths.iter().enumerate() {
        if p.agent != a {
            r.add(Some(a), None, PathCount, format!("path filed under agent {}", p.agent));
        }
        if p.vertices.is_empty() {
            r.add(Some(a), None, EmptyPath, "no vertices".into());
            usable[a] = false;
            continue;
        }
        if p.vertices[0] != inst.agents[a].start {
            r.add(Some(a), Some(0), WrongStart, format!("starts at {:?}", p.vertices[0]));
        }
        for (t, &c) in p.vertices.iter().enumerate() {
            if !inst.map.is_passable(c) {
                r.add(Some(a), Some(t as u32), Impassable, format!("{c:?}"));
            }
            if t > 0 && p.vertices[t - 1].manhattan(c) > 1 {
                r.add(Some(a), Some(t as u32), Teleport, format!("{:?} -> {c:?}", p.vertices[t - 1]));
            }
        }
    }

    // Slot coverage.
    let mut holder: BTreeMap<SlotRef, Vec<usize>> = BTreeMap::new();
    for (a, list) in sol.assignments.iter().enumerate() {
        for &s in list {
            if s.task >= inst.tasks.len() || s.slot >= inst.tasks[s.task].k() {
                r.add(Some(a), None, Coverage, format!("slot {s} does not exist"));
                continue;
            }
            holder.entry(s).or_default().push(a);
        }
    }
    for (t, task) in inst.tasks.iter().enumerate() {
        for s in 0..task.k() {
            let sref = SlotRef::new(t, s);
            let who = holder.get(&sref).map_or(&[][..], Vec::as_slice);
            if who.len() != 1 {
                r.add(None, None, Coverage, format!("slot {sref} held by {who:?}"));
            }
        }
    }

    // Segment structure and per-agent task windows.
    let mut windows: BTreeMap<usize, Vec<(usize, u32, u32, SlotRef)>> = BTreeMap::new();
    let mut finish = vec![0u32; n];
    for (a, p) in sol.paths.iter().enumerate() {
        if !usable[a] {
            continue;
        }
        let end = p.vertices.len() as u32 - 1;
        let segs = &p.segments;
        if segs.is_empty() || segs[0].start != 0 {
            r.add(Some(a), None, Segments, "segments must start at t=0".into());
            continue;
        }
        let mut ok = true;
        for w in segs.windows(2) {
            if w[0].end != w[1].start {
                r.add(Some(a), Some(w[1].start), Segments, "gap or overlap".into());
                ok = false;
            }
        }
        if segs.iter().any(|s| s.end < s.start) || segs.last().unwrap().end != end {
            r.add(Some(a), None, Segments, format!("segments do not end with the path at t={end}"));
            ok = false;
        }
        if !ok {
            continue;
        }
        if segs.iter().all(|s| s.phase == Phase::Idle) {
            if end != 0 {
                r.add(Some(a), Some(1), Trailing, "idle agent moves".into());
            }
            if !sol.assignments[a].is_empty() {
                r.add(Some(a), None, Assignment, "idle agent has assignments".into());
            }
            continue;
        }
        let mut listed = Vec::new();
        let mut i = 0;
        while i < segs.len() {
            match (segs[i].phase, segs.get(i + 1).map(|s| s.phase)) {
                (Phase::Assembly(s), Some(Phase::Convoy(t))) if s.task == t => {
                    listed.push(s);
                    windows
                        .entry(t)
                        .or_default()
                        .push((a, segs[i + 1].start, segs[i + 1].end, s));
                    if cell_at(p, segs[i].end) != inst.slot_cell(s) {
                        r.add(Some(a), Some(segs[i].end), NotOnSlot, format!("slot {s}"));
                    }
                    finish[a] = segs[i + 1].end;
                    i += 2;
                }
                _ => {
                    r.add(Some(a), Some(segs[i].start), Segments, "expected assembly then convoy".into());
                    break;
                }
            }
        }
        if listed != sol.assignments[a] {
            r.add(Some(a), None, Assignment, format!("segments visit {listed:?}"));
        }
        if end != finish[a] {
            r.add(Some(a), Some(finish[a]), Trailing, format!("path runs to t={end}"));
        }
    }

    // Convoys: same window for every member, rigid motion, goal placement.
    for (task, members) in &windows {
        let spec = &inst.tasks[*task];
        let (_, start, end, _) = members[0];
        if members.len() != spec.k() || members.iter().any(|m| m.1 != start || m.2 != end) {
            r.add(None, Some(start), Unsynchronized, format!("task {task}: {members:?}"));
            continue;
        }
        let lead = members.iter().find(|m| m.3.slot == 0).map(|m| m.0);
        let Some(lead) = lead else { continue };
        let lp = &sol.paths[lead];
        for &(a, _, _, s) in members {
            let p = &sol.paths[a];
            for t in start..=end {
                let expect = cell_at(lp, t).shifted(spec.shape()[s.slot]);
                if cell_at(p, t) != expect {
                    r.add(Some(a), Some(t), Rigidity, format!("task {task} expects {expect:?}"));
                    break;
                }
            }
            if cell_at(p, end) != inst.goal_cell(s) {
                r.add(Some(a), Some(end), MissedGoal, format!("task {task} slot {}", s.slot));
            }
        }
    }

    // Vertex conflicts with everybody parked at their last cell.
    let live: Vec<usize> = (0..n).filter(|&a| usable[a]).collect();
    let horizon = live.iter().map(|&a| sol.paths[a].vertices.len() as u32).max().unwrap_or(0);
    for t in 0..horizon {
        let mut seen: BTreeMap<Cell, usize> = BTreeMap::new();
        for &a in &live {
            let c = cell_at(&sol.paths[a], t);
            if let Some(b) = seen.insert(c, a) {
                r.add(Some(a), Some(t), VertexConflict, format!("agents {b} and {a} on {c:?}"));
            }
        }
    }

    let soc: u64 = finish.iter().map(|&f| f as u64).sum();
    if soc != sol.soc {
        r.add(None, None, SocMismatch, format!("reported {} but paths cost {soc}", sol.soc));
    }
    r.0
}
