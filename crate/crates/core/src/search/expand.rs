use std::fmt;
use std::str::FromStr;

use crate::domain::SlotRef;

/// How task-expansion children are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Expansion {
    /// One agent into one slot per step; a started task is completed before
    /// another is opened, and new tasks are opened through their first slot.
    #[default]
    Incremental,
    /// As `Incremental`, but a new task may be opened through any slot.
    IncrementalLr,
    /// A whole ordered team per step.
    Combinatorial,
}

impl Expansion {
    pub const ALL: [Expansion; 3] = [
        Expansion::Incremental,
        Expansion::IncrementalLr,
        Expansion::Combinatorial,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Expansion::Incremental => "incremental",
            Expansion::IncrementalLr => "incremental-lr",
            Expansion::Combinatorial => "combinatorial",
        }
    }
}

impl fmt::Display for Expansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Expansion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expansion::ALL
            .into_iter()
            .find(|e| e.token() == s)
            .ok_or_else(|| {
                format!("unknown expansion `{s}` (expected incremental, incremental-lr or combinatorial)")
            })
    }
}

/// Slots a child adds, as `(agent, slot)` pairs in the order they are appended.
pub type Step = Vec<(usize, SlotRef)>;

/// Children that fill the lowest free slot of `task` with each allowed agent.
pub fn complete_partial(
    task: usize,
    staff: &[Option<usize>],
    available: &[usize],
    allowed: impl Fn(usize, usize) -> bool,
) -> Vec<Step> {
    let Some(slot) = staff.iter().position(Option::is_none) else {
        return Vec::new();
    };
    available
        .iter()
        .filter(|&&a| allowed(a, task))
        .map(|&a| vec![(a, SlotRef::new(task, slot))])
        .collect()
}

/// Children that open one of `tasks`, according to `expansion`.
pub fn open_new(
    expansion: Expansion,
    tasks: &[(usize, usize)],
    agents: &[usize],
    allowed: impl Fn(usize, usize) -> bool,
) -> Vec<Step> {
    let mut out = Vec::new();
    for &(task, k) in tasks {
        match expansion {
            Expansion::Incremental => {
                for &a in agents.iter().filter(|&&a| allowed(a, task)) {
                    out.push(vec![(a, SlotRef::new(task, 0))]);
                }
            }
            Expansion::IncrementalLr => {
                for slot in 0..k {
                    for &a in agents.iter().filter(|&&a| allowed(a, task)) {
                        out.push(vec![(a, SlotRef::new(task, slot))]);
                    }
                }
            }
            Expansion::Combinatorial => {
                let pool: Vec<usize> = agents.iter().copied().filter(|&a| allowed(a, task)).collect();
                let mut team = Vec::with_capacity(k);
                let mut used = vec![false; pool.len()];
                permutations(&pool, k, &mut team, &mut used, &mut |team| {
                    out.push(
                        team.iter()
                            .enumerate()
                            .map(|(slot, &a)| (a, SlotRef::new(task, slot)))
                            .collect(),
                    );
                });
            }
        }
    }
    out
}

fn permutations(
    pool: &[usize],
    k: usize,
    team: &mut Vec<usize>,
    used: &mut [bool],
    emit: &mut dyn FnMut(&[usize]),
) {
    if team.len() == k {
        emit(team);
        return;
    }
    for i in 0..pool.len() {
        if !used[i] {
            used[i] = true;
            team.push(pool[i]);
            permutations(pool, k, team, used, emit);
            team.pop();
            used[i] = false;
        }
    }
}
