use crate::domain::{Instance, SlotRef};
use crate::lowlevel::NodePlan;

/// Which slots are held by whom in a node.
#[derive(Debug, Clone)]
pub struct Staffing {
    /// `staff[task][slot]` is the agent holding that slot.
    pub staff: Vec<Vec<Option<usize>>>,
}

impl Staffing {
    pub fn new(inst: &Instance, assignments: &[Vec<SlotRef>]) -> Self {
        let mut staff: Vec<Vec<Option<usize>>> =
            inst.tasks.iter().map(|t| vec![None; t.k()]).collect();
        for (a, list) in assignments.iter().enumerate() {
            for s in list {
                staff[s.task][s.slot] = Some(a);
            }
        }
        Staffing { staff }
    }

    pub fn is_full(&self, task: usize) -> bool {
        self.staff[task].iter().all(Option::is_some)
    }

    pub fn is_untouched(&self, task: usize) -> bool {
        self.staff[task].iter().all(Option::is_none)
    }

    /// Tasks with some but not all slots held.
    pub fn partial_tasks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.staff.len()).filter(|&t| !self.is_full(t) && !self.is_untouched(t))
    }

    pub fn unassigned_tasks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.staff.len()).filter(|&t| self.is_untouched(t))
    }

    /// Agents not holding a slot of any partially staffed task.
    pub fn available_agents(&self, agents: usize) -> Vec<usize> {
        let mut busy = vec![false; agents];
        for t in self.partial_tasks() {
            for a in self.staff[t].iter().flatten() {
                busy[*a] = true;
            }
        }
        (0..agents).filter(|&a| !busy[a]).collect()
    }
}

/// Admissible estimate of the cost still to come: [`transport_estimate`]
/// plus [`assignment_estimate`].
pub fn heuristic(inst: &Instance, staffing: &Staffing, plan: &NodePlan) -> u64 {
    transport_estimate(inst, staffing) + assignment_estimate(inst, staffing, plan)
}

/// Each member of a partially staffed task still has to cover at least the
/// Manhattan distance from its slot to its goal cell.
pub fn transport_estimate(inst: &Instance, staffing: &Staffing) -> u64 {
    staffing
        .partial_tasks()
        .flat_map(|t| {
            let task = &inst.tasks[t];
            staffing.staff[t]
                .iter()
                .enumerate()
                .filter(|(_, holder)| holder.is_some())
                .map(move |(slot, _)| task.slot(slot).manhattan(task.goal(slot)) as u64)
        })
        .sum()
}

/// Each free slot costs at least the cheaper of a direct trip from an
/// available agent's current end cell and a trip from a goal cell of another
/// task that is not yet fully staffed (an agent may come from finishing it).
pub fn assignment_estimate(inst: &Instance, staffing: &Staffing, plan: &NodePlan) -> u64 {
    let available = staffing.available_agents(inst.agent_count());
    let mut total = 0u64;
    for (t, task) in inst.tasks.iter().enumerate() {
        for (slot, holder) in staffing.staff[t].iter().enumerate() {
            if holder.is_some() {
                continue;
            }
            let s = task.slot(slot);
            let direct = available
                .iter()
                .map(|&a| plan.end_location(a).manhattan(s));
            let chained = (0..inst.tasks.len())
                .filter(|&u| u != t && !staffing.is_full(u))
                .flat_map(|u| inst.tasks[u].goals().iter().map(move |g| g.manhattan(s)));
            total += direct.chain(chained).min().unwrap_or(0) as u64;
        }
    }
    total
}
