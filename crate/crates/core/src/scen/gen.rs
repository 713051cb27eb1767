use std::collections::{BTreeSet, HashSet};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::domain::{footprint, validate_placement, AgentSpec, Cell, GridMap, Instance, Offset, TaskSpec};
use crate::lowlevel::{unified_a_star, DistanceMap, Mover, Unrestricted};

use super::{Family, ScenError, ScenarioConfig};

/// Rejected draws allowed per generated instance.
pub const REJECTION_BUDGET: u32 = 10_000;

/// Seeded generator: xoshiro256++ seeded through splitmix64 (the
/// `seed_from_u64` expansion), with bounded draws by rejection.
#[derive(Debug, Clone)]
pub struct ScenRng(Xoshiro256PlusPlus);

impl ScenRng {
    pub fn new(seed: u64) -> Self {
        ScenRng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Index drawn with probability proportional to `weights[i]`.
    pub fn weighted(&mut self, weights: &[u64]) -> usize {
        let total: u64 = weights.iter().sum();
        let mut r = self.below(total);
        for (i, &w) in weights.iter().enumerate() {
            if r < w {
                return i;
            }
            r -= w;
        }
        unreachable!("draw below the total weight")
    }
}

/// Axis-aligned inclusive box of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min: Cell,
    pub max: Cell,
}

impl BoundingBox {
    pub fn of(cells: impl IntoIterator<Item = Cell>) -> Option<Self> {
        let mut it = cells.into_iter();
        let first = it.next()?;
        Some(it.fold(BoundingBox { min: first, max: first }, |b, c| BoundingBox {
            min: Cell::new(b.min.x.min(c.x), b.min.y.min(c.y)),
            max: Cell::new(b.max.x.max(c.x), b.max.y.max(c.y)),
        }))
    }

    /// Which side of the box a cell lies strictly on, if any, along `axis`.
    pub fn side(&self, axis: Axis, c: Cell) -> Option<Side> {
        let (v, lo, hi) = match axis {
            Axis::X => (c.x, self.min.x, self.max.x),
            Axis::Y => (c.y, self.min.y, self.max.y),
        };
        if v < lo {
            Some(Side::Low)
        } else if v > hi {
            Some(Side::High)
        } else {
            None
        }
    }

    /// True iff `a` and `b` lie strictly on opposite sides along some axis.
    pub fn separates(&self, a: Cell, b: Cell) -> bool {
        [Axis::X, Axis::Y].into_iter().any(|axis| {
            matches!(
                (self.side(axis, a), self.side(axis, b)),
                (Some(Side::Low), Some(Side::High)) | (Some(Side::High), Some(Side::Low))
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

/// Box around every cell the task's footprint covers along its shortest
/// convoy route when no other agent is present.
pub fn route_box(map: &GridMap, task: &TaskSpec) -> Option<BoundingBox> {
    let members: Vec<usize> = (0..task.k()).collect();
    let mover = Mover::new(task.shape(), &members);
    let resting = vec![false; task.k()];
    let route = unified_a_star(
        map,
        mover,
        task.start_anchor(),
        0,
        task.goal_anchor(),
        &Unrestricted,
        &resting,
    )
    .ok()?;
    BoundingBox::of(route.anchors.iter().flat_map(|&a| footprint(task.shape(), a)))
}

/// Shape offsets sorted so slot 0 is the lexicographically smallest cell,
/// at offset (0, 0).
fn normalize(cells: &BTreeSet<(i32, i32)>) -> Vec<Offset> {
    let &(x0, y0) = cells.iter().next().expect("non-empty shape");
    cells.iter().map(|&(x, y)| Offset::new(x - x0, y - y0)).collect()
}

const STEPS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Every fixed polyomino of `k` cells, each normalized, in sorted order.
pub fn polyominoes(k: usize) -> Vec<Vec<Offset>> {
    let mut level: BTreeSet<BTreeSet<(i32, i32)>> = BTreeSet::from([BTreeSet::from([(0, 0)])]);
    for _ in 1..k {
        let mut next = BTreeSet::new();
        for shape in &level {
            for &(x, y) in shape {
                for (dx, dy) in STEPS {
                    let c = (x + dx, y + dy);
                    if shape.contains(&c) {
                        continue;
                    }
                    let mut grown = shape.clone();
                    grown.insert(c);
                    let mx = grown.iter().map(|p| p.0).min().unwrap();
                    let my = grown.iter().map(|p| p.1).min().unwrap();
                    next.insert(grown.iter().map(|&(x, y)| (x - mx, y - my)).collect());
                }
            }
        }
        level = next;
    }
    level.iter().map(normalize).collect()
}

/// Uniform over fixed polyominoes for `k ≤ 4`, random growth beyond that.
pub fn sample_shape(rng: &mut ScenRng, k: usize) -> Vec<Offset> {
    if k <= 4 {
        let all = polyominoes(k);
        return all[rng.below(all.len() as u64) as usize].clone();
    }
    let mut cells = BTreeSet::from([(0, 0)]);
    while cells.len() < k {
        let list: Vec<_> = cells.iter().copied().collect();
        let (x, y) = list[rng.below(list.len() as u64) as usize];
        let (dx, dy) = STEPS[rng.below(4) as usize];
        cells.insert((x + dx, y + dy));
    }
    normalize(&cells)
}

/// Map with exactly `round(density · cells)` obstacles, redrawn until the
/// free space is connected.
fn sample_map(rng: &mut ScenRng, cfg: &ScenarioConfig, budget: &mut u32) -> Result<GridMap, ScenError> {
    let total = (cfg.width * cfg.height) as usize;
    let count = (cfg.obstacle_density * total as f64).round() as usize;
    loop {
        let mut order: Vec<usize> = (0..total).collect();
        for i in 0..count {
            let j = i + rng.below((total - i) as u64) as usize;
            order.swap(i, j);
        }
        let blocked = order[..count].iter().map(|&i| {
            Cell::new((i % cfg.width as usize) as i32, (i / cfg.width as usize) as i32)
        });
        let map = GridMap::new(cfg.width, cfg.height, blocked)?;
        if map.passable_count() > 0 && map.is_connected() {
            return Ok(map);
        }
        spend(budget, "connected obstacle layout")?;
    }
}

fn spend(budget: &mut u32, what: &'static str) -> Result<(), ScenError> {
    if *budget == 0 {
        return Err(ScenError::Exhausted(what));
    }
    *budget -= 1;
    Ok(())
}

fn all_cells(map: &GridMap) -> Vec<Cell> {
    (0..map.cell_count()).map(|i| map.cell_at(i)).collect()
}

fn uniform_weights(map: &GridMap) -> Vec<u64> {
    vec![1; map.cell_count()]
}

fn start_weights(map: &GridMap) -> Vec<u64> {
    all_cells(map).iter().map(|c| 1 + (c.x + c.y) as u64).collect()
}

fn goal_weights(map: &GridMap) -> Vec<u64> {
    let (w, h) = (map.width() as i32, map.height() as i32);
    all_cells(map)
        .iter()
        .map(|c| 1 + ((w - 1 - c.x) + (h - 1 - c.y)) as u64)
        .collect()
}

fn agent_weights(map: &GridMap) -> Vec<u64> {
    let (w, h) = (map.width() as i32, map.height() as i32);
    all_cells(map)
        .iter()
        .map(|c| 1 + (c.x * (h - 1) - c.y * (w - 1)).unsigned_abs() as u64)
        .collect()
}

/// Per-family anchor weights, as used by the generators.
pub fn family_weights(family: Family, map: &GridMap) -> [Vec<u64>; 3] {
    match family {
        Family::Spatial => [start_weights(map), goal_weights(map), agent_weights(map)],
        Family::Random | Family::CollisionRich => {
            [uniform_weights(map), uniform_weights(map), uniform_weights(map)]
        }
    }
}

/// Generates an instance with one task per entry of `sizes`, in order.
pub fn generate_sized(cfg: &ScenarioConfig, sizes: &[usize]) -> Result<Instance, ScenError> {
    cfg.check(sizes)?;
    let mut rng = ScenRng::new(cfg.seed);
    let mut budget = REJECTION_BUDGET;
    let map = sample_map(&mut rng, cfg, &mut budget)?;
    let cells = all_cells(&map);
    let [_, _, aw] = family_weights(cfg.family, &map);

    let tasks = place_tasks(&mut rng, &map, cfg.family, sizes, &mut budget)?;
    let goal_cells: HashSet<Cell> = tasks.iter().flat_map(|t| t.goals().iter().copied()).collect();

    let mut agents: Vec<AgentSpec> = Vec::new();
    let mut taken: HashSet<Cell> = HashSet::new();
    while agents.len() < cfg.agent_count {
        let c = cells[rng.weighted(&aw)];
        if map.is_passable(c) && !goal_cells.contains(&c) && taken.insert(c) {
            agents.push(AgentSpec { id: agents.len(), start: c });
        } else {
            spend(&mut budget, "agent placement")?;
        }
    }
    Ok(Instance::new(map, agents, tasks)?)
}

/// Draws allowed for one task before the whole task set is redrawn.
const TASK_ATTEMPTS: u32 = 200;

fn place_tasks(
    rng: &mut ScenRng,
    map: &GridMap,
    family: Family,
    sizes: &[usize],
    budget: &mut u32,
) -> Result<Vec<TaskSpec>, ScenError> {
    let cells = all_cells(map);
    let [sw, gw, _] = family_weights(family, map);
    'restart: loop {
        let mut tasks: Vec<TaskSpec> = Vec::new();
        let mut goal_cells: HashSet<Cell> = HashSet::new();
        let mut reference: Option<BoundingBox> = None;
        for (id, &k) in sizes.iter().enumerate() {
            let shape = sample_shape(rng, k);
            let flip = rng.below(2);
            let mut attempts = 0;
            let task = loop {
                let drawn = match reference {
                    Some(bbox) => opposite_anchors(rng, &cells, &bbox, id, flip),
                    None => Some((cells[rng.weighted(&sw)], cells[rng.weighted(&gw)])),
                };
                if let Some(t) = drawn.and_then(|(s, g)| admissible(map, &shape, s, g, id, &goal_cells)) {
                    break t;
                }
                spend(budget, "task placement")?;
                attempts += 1;
                if drawn.is_none() || attempts == TASK_ATTEMPTS {
                    continue 'restart;
                }
            };
            if family == Family::CollisionRich && id == 0 {
                reference = route_box(map, &task);
            }
            goal_cells.extend(task.goals().iter().copied());
            tasks.push(task);
        }
        return Ok(tasks);
    }
}

/// Start and goal anchors strictly on opposite sides of the reference box.
/// Axis alternates with the task index and falls back to the other axis when
/// the preferred one has no room; `flip` picks which side holds the start.
fn opposite_anchors(
    rng: &mut ScenRng,
    cells: &[Cell],
    bbox: &BoundingBox,
    id: usize,
    flip: u64,
) -> Option<(Cell, Cell)> {
    let preferred = if id % 2 == 1 { Axis::X } else { Axis::Y };
    let other = if preferred == Axis::X { Axis::Y } else { Axis::X };
    for axis in [preferred, other] {
        let low: Vec<Cell> = cells.iter().copied().filter(|&c| bbox.side(axis, c) == Some(Side::Low)).collect();
        let high: Vec<Cell> = cells.iter().copied().filter(|&c| bbox.side(axis, c) == Some(Side::High)).collect();
        if low.is_empty() || high.is_empty() {
            continue;
        }
        let (from, to) = if flip == 0 { (&low, &high) } else { (&high, &low) };
        let s = from[rng.below(from.len() as u64) as usize];
        let g = to[rng.below(to.len() as u64) as usize];
        return Some((s, g));
    }
    None
}

/// Builds the task if both placements fit, differ, are linked by a convoy
/// route, and the goal cells are free of earlier goals.
fn admissible(
    map: &GridMap,
    shape: &[Offset],
    s: Cell,
    g: Cell,
    id: usize,
    goal_cells: &HashSet<Cell>,
) -> Option<TaskSpec> {
    if s == g || !validate_placement(map, shape, s) || !validate_placement(map, shape, g) {
        return None;
    }
    let goals = footprint(shape, g);
    if goals.iter().any(|c| goal_cells.contains(c)) {
        return None;
    }
    DistanceMap::new(map, shape, g).get(s)?;
    TaskSpec::new(id, footprint(shape, s), goals).ok()
}

/// Generates the instance described by `cfg`.
pub fn generate(cfg: &ScenarioConfig) -> Result<Instance, ScenError> {
    generate_sized(cfg, &cfg.task_sizes())
}
