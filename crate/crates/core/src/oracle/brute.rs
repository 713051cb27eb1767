use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::time::Instant;

use thiserror::Error;

use crate::domain::{
    Cell, Instance, Offset, Path, Phase, Segment, Solution, SolverStats, SlotRef, Status, MOVES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Most tasks any single agent may take part in.
    pub assignment_cap: usize,
    /// Joint states the search may store before giving up.
    pub state_limit: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            assignment_cap: 2,
            state_limit: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no joint plan completes every task")]
    Infeasible,
    #[error("joint state space exceeds the limit of {0} states")]
    TooLarge(usize),
    #[error("instance has more than 64 slots or 32 tasks")]
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Mode {
    /// Heading for (or waiting at) a slot, by global slot index.
    Travel(u16),
    /// Part of the convoy of the task owning this global slot.
    Convoy(u16),
    /// Finished for good (or never started); stationary, costs nothing.
    Done,
    /// Between tasks; resolved before the state is stored.
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Joint {
    pos: Vec<u16>,
    mode: Vec<Mode>,
    taken_by: Vec<u8>,
    slots_taken: u64,
    tasks_done: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Choose(usize, u16),
    Form(usize),
    Complete(usize),
}

struct World<'a> {
    inst: &'a Instance,
    width: i32,
    /// Global slot index -> (task, slot).
    slots: Vec<SlotRef>,
    first_slot: Vec<u16>,
    /// Single-agent distance to each slot, by cell index.
    to_slot: Vec<Vec<u32>>,
    /// Convoy anchor distance to the goal anchor, per task and cell.
    to_goal: Vec<Vec<u32>>,
    exec: Vec<u32>,
    cap: usize,
}

const FAR: u32 = u32::MAX / 4;

impl<'a> World<'a> {
    fn new(inst: &'a Instance, cap: usize) -> Self {
        let mut slots = Vec::new();
        let mut first_slot = Vec::new();
        for (t, task) in inst.tasks.iter().enumerate() {
            first_slot.push(slots.len() as u16);
            slots.extend((0..task.k()).map(|s| SlotRef::new(t, s)));
        }
        let to_slot = slots
            .iter()
            .map(|s| bfs(inst, &[Offset::ZERO], inst.slot_cell(*s)))
            .collect();
        let to_goal: Vec<Vec<u32>> = inst
            .tasks
            .iter()
            .map(|t| bfs(inst, t.shape(), t.goal_anchor()))
            .collect();
        let exec = inst
            .tasks
            .iter()
            .zip(&to_goal)
            .map(|(t, d)| d[idx(inst, t.start_anchor())])
            .collect();
        World {
            inst,
            width: inst.map.width() as i32,
            slots,
            first_slot,
            to_slot,
            to_goal,
            exec,
            cap,
        }
    }

    fn cell(&self, i: u16) -> Cell {
        Cell::new(i as i32 % self.width, i as i32 / self.width)
    }

    fn index(&self, c: Cell) -> u16 {
        (c.y * self.width + c.x) as u16
    }

    fn task_slots(&self, task: usize) -> std::ops::Range<u16> {
        let first = self.first_slot[task];
        first..first + self.inst.tasks[task].k() as u16
    }

    fn estimate(&self, s: &Joint) -> u64 {
        let mut h = 0u64;
        for (a, m) in s.mode.iter().enumerate() {
            h += match *m {
                Mode::Travel(g) => {
                    let task = self.slots[g as usize].task;
                    (self.to_slot[g as usize][s.pos[a] as usize] + self.exec[task]) as u64
                }
                Mode::Convoy(g) => {
                    let task = self.slots[g as usize].task;
                    let anchor = self.anchor(s, task);
                    self.to_goal[task][idx(self.inst, anchor)] as u64
                }
                Mode::Done | Mode::Free => 0,
            };
        }
        for (g, r) in self.slots.iter().enumerate() {
            if s.slots_taken & (1 << g) == 0 {
                h += self.exec[r.task] as u64;
            }
        }
        h
    }

    /// Anchor of `task`'s convoy: the cell of its slot-0 member.
    fn anchor(&self, s: &Joint, task: usize) -> Cell {
        let first = self.first_slot[task];
        let a = s
            .mode
            .iter()
            .position(|m| *m == Mode::Convoy(first))
            .expect("convoy has a slot-0 member");
        self.cell(s.pos[a])
    }

    fn is_goal(&self, s: &Joint) -> bool {
        s.tasks_done.count_ones() as usize == self.inst.tasks.len()
            && s.mode.iter().all(|m| *m == Mode::Done)
    }

    /// All ways to resolve same-timestep decisions: agents between tasks pick
    /// a free slot or stop, teams standing on their slots may form a convoy,
    /// convoys on their goal may finish.
    fn settle(&self, s: Joint, out: &mut Vec<(Joint, Vec<Event>)>) {
        let mut stack = vec![(s, Vec::new(), 0u32, 0u32)];
        while let Some((s, events, formed_seen, done_seen)) = stack.pop() {
            if let Some(a) = s.mode.iter().position(|m| *m == Mode::Free) {
                let mut stop = s.clone();
                stop.mode[a] = Mode::Done;
                stack.push((stop, events.clone(), formed_seen, done_seen));
                if (s.taken_by[a] as usize) < self.cap {
                    for g in 0..self.slots.len() as u16 {
                        if s.slots_taken & (1 << g) != 0 {
                            continue;
                        }
                        let mut next = s.clone();
                        next.mode[a] = Mode::Travel(g);
                        next.slots_taken |= 1 << g;
                        next.taken_by[a] += 1;
                        let mut ev = events.clone();
                        ev.push(Event::Choose(a, g));
                        stack.push((next, ev, formed_seen, done_seen));
                    }
                }
                continue;
            }
            let finishing = (0..self.inst.tasks.len()).find(|&t| {
                done_seen & (1 << t) == 0 && self.convoy_at_goal(&s, t)
            });
            if let Some(t) = finishing {
                stack.push((s.clone(), events.clone(), formed_seen, done_seen | 1 << t));
                let mut next = s;
                for m in next.mode.iter_mut() {
                    if matches!(*m, Mode::Convoy(g) if self.slots[g as usize].task == t) {
                        *m = Mode::Free;
                    }
                }
                next.tasks_done |= 1 << t;
                let mut ev = events;
                ev.push(Event::Complete(t));
                stack.push((next, ev, formed_seen, done_seen | 1 << t));
                continue;
            }
            let forming = (0..self.inst.tasks.len()).find(|&t| {
                formed_seen & (1 << t) == 0 && self.team_ready(&s, t)
            });
            if let Some(t) = forming {
                stack.push((s.clone(), events.clone(), formed_seen | 1 << t, done_seen));
                let mut next = s;
                for m in next.mode.iter_mut() {
                    if let Mode::Travel(g) = *m {
                        if self.slots[g as usize].task == t {
                            *m = Mode::Convoy(g);
                        }
                    }
                }
                let mut ev = events;
                ev.push(Event::Form(t));
                stack.push((next, ev, formed_seen | 1 << t, done_seen));
                continue;
            }
            out.push((s, events));
        }
    }

    fn convoy_at_goal(&self, s: &Joint, t: usize) -> bool {
        let first = self.first_slot[t];
        s.mode.iter().any(|m| *m == Mode::Convoy(first))
            && self.anchor(s, t) == self.inst.tasks[t].goal_anchor()
    }

    fn team_ready(&self, s: &Joint, t: usize) -> bool {
        self.task_slots(t).all(|g| {
            s.mode
                .iter()
                .position(|m| *m == Mode::Travel(g))
                .is_some_and(|a| self.cell(s.pos[a]) == self.inst.slot_cell(self.slots[g as usize]))
        })
    }

    /// Every joint move: travellers and convoys each take one of five moves,
    /// stopped agents stay, and no two agents may end on the same cell.
    fn moves(&self, s: &Joint, out: &mut Vec<Joint>) {
        // Units: single travellers, or whole convoys listed once by task.
        let mut units: Vec<Vec<usize>> = Vec::new();
        let mut convoy_unit: HashMap<usize, usize> = HashMap::new();
        for (a, m) in s.mode.iter().enumerate() {
            match *m {
                Mode::Travel(_) => units.push(vec![a]),
                Mode::Convoy(g) => {
                    let t = self.slots[g as usize].task;
                    let u = *convoy_unit.entry(t).or_insert_with(|| {
                        units.push(Vec::new());
                        units.len() - 1
                    });
                    units[u].push(a);
                }
                Mode::Done | Mode::Free => {}
            }
        }
        let mut choice = vec![0usize; units.len()];
        loop {
            let mut next = s.clone();
            let mut ok = true;
            'units: for (u, members) in units.iter().enumerate() {
                let m = MOVES[choice[u]];
                for &a in members {
                    let c = self.cell(s.pos[a]).shifted(m);
                    if !self.inst.map.is_passable(c) {
                        ok = false;
                        break 'units;
                    }
                    next.pos[a] = self.index(c);
                }
            }
            if ok {
                let mut seen = next.pos.clone();
                seen.sort_unstable();
                if seen.windows(2).all(|w| w[0] != w[1]) {
                    out.push(next);
                }
            }
            // Odometer over the five moves of every unit.
            let mut i = 0;
            loop {
                if i == units.len() {
                    return;
                }
                choice[i] += 1;
                if choice[i] < MOVES.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }
}

fn idx(inst: &Instance, c: Cell) -> usize {
    (c.y * inst.map.width() as i32 + c.x) as usize
}

/// Plain BFS over placements of `shape`, from `target`; `FAR` where unreachable.
fn bfs(inst: &Instance, shape: &[Offset], target: Cell) -> Vec<u32> {
    let map = &inst.map;
    let fits = |c: Cell| shape.iter().all(|&d| map.is_passable(c.shifted(d)));
    let mut dist = vec![FAR; map.cell_count()];
    if !fits(target) {
        return dist;
    }
    dist[idx(inst, target)] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(c) = queue.pop_front() {
        let d = dist[idx(inst, c)];
        for &m in &MOVES[1..] {
            let n = c.shifted(m);
            if map.in_bounds(n) && fits(n) && dist[idx(inst, n)] == FAR {
                dist[idx(inst, n)] = d + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Exhaustive optimum by A* over joint states of all agents.
///
/// Shares no planning code with the solvers. The joint state records every
/// agent's cell and mode plus which slots are taken and which tasks are done;
/// each timestep costs one per agent that has not stopped for good. The
/// heuristic (remaining distance to each agent's slot plus the convoy
/// distance of every unfinished slot) is consistent, so the first goal popped
/// is optimal.
pub fn brute_force_optimal(inst: &Instance, config: &OracleConfig) -> Result<Solution, OracleError> {
    let started = Instant::now();
    if inst.slot_count() > 64 || inst.tasks.len() > 32 {
        return Err(OracleError::Unsupported);
    }
    let world = World::new(inst, config.assignment_cap);
    let n = inst.agent_count();
    let root = Joint {
        pos: inst.agents.iter().map(|a| world.index(a.start)).collect(),
        mode: vec![Mode::Free; n],
        taken_by: vec![0; n],
        slots_taken: 0,
        tasks_done: 0,
    };

    let mut best: HashMap<Joint, u64> = HashMap::new();
    let mut parent: HashMap<Joint, (Option<Joint>, Vec<Event>)> = HashMap::new();
    let mut open = BinaryHeap::new();
    let mut order = 0u64;
    let mut settled = Vec::new();
    world.settle(root, &mut settled);
    for (s, ev) in settled.drain(..) {
        if let Entry::Vacant(e) = best.entry(s.clone()) {
            e.insert(0);
            parent.insert(s.clone(), (None, ev));
            order += 1;
            open.push(Reverse((world.estimate(&s), Reverse(0u64), order, s)));
        }
    }

    let mut stats = SolverStats::default();
    let mut moved = Vec::new();
    while let Some(Reverse((_, Reverse(g), _, s))) = open.pop() {
        if best.get(&s).is_some_and(|&b| b < g) {
            continue;
        }
        stats.nodes_popped += 1;
        if world.is_goal(&s) {
            stats.status = Status::Solved;
            stats.runtime_ms = started.elapsed().as_millis() as u64;
            return Ok(rebuild(&world, &parent, s, g, stats));
        }
        let step = s.mode.iter().filter(|m| **m != Mode::Done).count() as u64;
        moved.clear();
        world.moves(&s, &mut moved);
        for m in moved.drain(..) {
            world.settle(m, &mut settled);
            for (next, ev) in settled.drain(..) {
                let ng = g + step;
                if best.get(&next).is_some_and(|&b| b <= ng) {
                    continue;
                }
                if best.len() >= config.state_limit {
                    return Err(OracleError::TooLarge(config.state_limit));
                }
                best.insert(next.clone(), ng);
                parent.insert(next.clone(), (Some(s.clone()), ev));
                stats.nodes_generated += 1;
                order += 1;
                open.push(Reverse((ng + world.estimate(&next), Reverse(ng), order, next)));
            }
        }
    }
    Err(OracleError::Infeasible)
}

fn rebuild(
    world: &World<'_>,
    parent: &HashMap<Joint, (Option<Joint>, Vec<Event>)>,
    goal: Joint,
    soc: u64,
    stats: SolverStats,
) -> Solution {
    let mut chain = vec![goal];
    while let (Some(p), _) = &parent[chain.last().unwrap()] {
        chain.push(p.clone());
    }
    chain.reverse();

    let n = world.inst.agent_count();
    let mut assignments = vec![Vec::new(); n];
    let mut segments: Vec<Vec<Segment>> = vec![Vec::new(); n];
    let mut open_since = vec![0u32; n];
    let mut finish = vec![0u32; n];
    for (t, s) in chain.iter().enumerate() {
        let t = t as u32;
        for ev in &parent[s].1 {
            match *ev {
                Event::Choose(a, g) => {
                    assignments[a].push(world.slots[g as usize]);
                    open_since[a] = t;
                }
                Event::Form(task) => {
                    for a in 0..n {
                        // Slots of a task go only to its members, so the
                        // current assignment identifies them.
                        if assignments[a].last().is_some_and(|r| r.task == task) {
                            segments[a].push(Segment {
                                start: open_since[a],
                                end: t,
                                phase: Phase::Assembly(*assignments[a].last().unwrap()),
                            });
                            open_since[a] = t;
                        }
                    }
                }
                Event::Complete(task) => {
                    for a in 0..n {
                        let in_convoy = segments[a]
                            .last()
                            .is_some_and(|seg| matches!(seg.phase, Phase::Assembly(r) if r.task == task));
                        if in_convoy {
                            segments[a].push(Segment {
                                start: open_since[a],
                                end: t,
                                phase: Phase::Convoy(task),
                            });
                            open_since[a] = t;
                            finish[a] = t;
                        }
                    }
                }
            }
        }
    }
    let paths = (0..n)
        .map(|a| {
            let vertices = chain[..=finish[a] as usize]
                .iter()
                .map(|s| world.cell(s.pos[a]))
                .collect();
            let mut segs = std::mem::take(&mut segments[a]);
            if segs.is_empty() {
                segs.push(Segment {
                    start: 0,
                    end: 0,
                    phase: Phase::Idle,
                });
            }
            Path {
                agent: a,
                vertices,
                segments: segs,
            }
        })
        .collect();
    Solution {
        assignments,
        paths,
        soc,
        stats,
    }
}
