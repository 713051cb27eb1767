use std::collections::BTreeMap;

use proptest::prelude::*;

use cttapf::conflict::{detect_first_conflict, split_asym, split_normal, split_sym, Resolver};
use cttapf::domain::{AgentSpec, Cell, Constraint, GridMap, Instance, Path, Phase, Segment, TaskSpec};
use cttapf::lowlevel::{build_mdd, unified_a_star, ConstraintTable, Mover};
use cttapf::oracle::{brute_force_optimal, validate, OracleConfig};
use cttapf::scen::{generate, Family, ScenarioConfig};
use cttapf::search::{Expansion, Limits};
use cttapf::subopt::{solve, Algorithm};

fn cell(w: i32, h: i32) -> impl Strategy<Value = Cell> {
    (0..w, 0..h).prop_map(|(x, y)| Cell::new(x, y))
}

/// A 5x5 map with a few blocked cells, never blocking `keep`.
fn map_keeping(blocked: Vec<Cell>, keep: &[Cell]) -> GridMap {
    GridMap::new(5, 5, blocked.into_iter().filter(|c| !keep.contains(c))).unwrap()
}

fn idle_path(agent: usize, vertices: Vec<Cell>) -> Path {
    let end = vertices.len() as u32 - 1;
    Path {
        agent,
        vertices,
        segments: vec![Segment { start: 0, end, phase: Phase::Idle }],
    }
}

/// Random walk of `len` steps on an open 4x4 grid.
fn walk(len: usize) -> impl Strategy<Value = Vec<Cell>> {
    (cell(4, 4), prop::collection::vec(0usize..5, len)).prop_map(|(start, moves)| {
        let mut out = vec![start];
        for m in moves {
            let c = *out.last().unwrap();
            let (dx, dy) = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)][m];
            let n = Cell::new((c.x + dx).clamp(0, 3), (c.y + dy).clamp(0, 3));
            out.push(n);
        }
        out
    })
}

fn agents_at(cells: &[Cell]) -> Vec<AgentSpec> {
    cells.iter().enumerate().map(|(id, &start)| AgentSpec { id, start }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn arrival_is_at_least_manhattan(
        from in cell(5, 5),
        to in cell(5, 5),
        blocked in prop::collection::vec(cell(5, 5), 0..6),
        t0 in 0u32..4,
    ) {
        let id = [0usize];
        let open = GridMap::open(5, 5).unwrap();
        let tr = unified_a_star(&open, Mover::single(&id), from, t0, to, &ConstraintTable::default(), &[false]).unwrap();
        prop_assert_eq!(tr.arrival(), t0 + from.manhattan(to));

        let map = map_keeping(blocked, &[from, to]);
        if let Ok(tr) = unified_a_star(&map, Mover::single(&id), from, t0, to, &ConstraintTable::default(), &[false]) {
            prop_assert!(tr.arrival() >= t0 + from.manhattan(to));
        }
    }

    #[test]
    fn constraints_never_speed_things_up(
        from in cell(5, 5),
        to in cell(5, 5),
        blocked in prop::collection::vec(cell(5, 5), 0..5),
        extra in prop::collection::vec((cell(5, 5), 0u32..10), 1..4),
    ) {
        let id = [0usize];
        let map = map_keeping(blocked, &[from, to]);
        let base = ConstraintTable::default();
        let Ok(before) = unified_a_star(&map, Mover::single(&id), from, 0, to, &base, &[false]) else {
            return Ok(());
        };
        let cons: Vec<Constraint> = extra.iter().map(|&(c, t)| Constraint::new(0, c, t)).collect();
        let table = ConstraintTable::new(&cons);
        if let Ok(after) = unified_a_star(&map, Mover::single(&id), from, 0, to, &table, &[false]) {
            prop_assert!(after.arrival() >= before.arrival());
        }
    }

    #[test]
    fn mdd_is_non_empty_exactly_from_the_arrival_on(
        from in cell(5, 5),
        to in cell(5, 5),
        extra in prop::collection::vec((cell(5, 5), 1u32..8), 0..4),
        slack in 0u32..3,
    ) {
        let id = [0usize];
        let map = GridMap::open(5, 5).unwrap();
        let cons: Vec<Constraint> = extra.iter().map(|&(c, t)| Constraint::new(0, c, t)).collect();
        let table = ConstraintTable::new(&cons);
        let Ok(tr) = unified_a_star(&map, Mover::single(&id), from, 0, to, &table, &[false]) else {
            return Ok(());
        };
        let arrival = tr.arrival();
        let reach = build_mdd(&map, Mover::single(&id), from, 0, to, arrival + slack, &table, &[false]);
        prop_assert!(!reach.is_empty());
        if arrival > 0 {
            let short = build_mdd(&map, Mover::single(&id), from, 0, to, arrival - 1, &table, &[false]);
            prop_assert!(short.is_empty());
        }
    }

    #[test]
    fn conflict_detection_ignores_agent_numbering(walks in prop::collection::vec(walk(6), 2..4)) {
        let n = walks.len();
        let starts: Vec<Cell> = walks.iter().map(|w| w[0]).collect();
        let inst = Instance::new(GridMap::open(4, 4).unwrap(), agents_at(&starts), vec![]);
        // Agents sharing a start are rejected by the instance; nothing to compare then.
        let Ok(inst) = inst else { return Ok(()) };
        let paths: Vec<Path> = walks.iter().cloned().enumerate().map(|(a, w)| idle_path(a, w)).collect();

        let rev_starts: Vec<Cell> = starts.iter().rev().copied().collect();
        let rev_inst = Instance::new(GridMap::open(4, 4).unwrap(), agents_at(&rev_starts), vec![]).unwrap();
        let rev_paths: Vec<Path> = walks.iter().rev().cloned().enumerate().map(|(a, w)| idle_path(a, w)).collect();

        let a = detect_first_conflict(&inst, &paths, true);
        let b = detect_first_conflict(&rev_inst, &rev_paths, true);
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert_eq!(a.t, b.t);
            for split in [split_normal(&a), split_asym(&a), split_sym(&a)] {
                prop_assert!(split.iter().flatten().all(|c| c.t == a.t));
            }
            // The pair and cell may differ when several agents collide at once.
            let pair = |x: usize, y: usize| (x.min(y), x.max(y));
            let (ax, ay) = (a.a.reference_agent(), a.b.reference_agent());
            let (bx, by) = (n - 1 - b.a.reference_agent(), n - 1 - b.b.reference_agent());
            if detect_all_at(&paths, a.t).len() == 2 {
                prop_assert_eq!(a.point(), b.point());
                prop_assert_eq!(pair(ax, ay), pair(bx, by));
            }
        }
    }

    #[test]
    fn generated_tasks_are_rigid_and_reproducible(
        seed in 0u64..10_000,
        family in prop::sample::select(Family::ALL.to_vec()),
        k in 1usize..5,
    ) {
        let config = ScenarioConfig {
            family,
            width: 8,
            height: 8,
            obstacle_density: 0.1,
            task_type_counts: BTreeMap::from([(1, 1), (k, 1)]),
            agent_count: k + 1,
            seed,
        };
        let Ok(inst) = generate(&config) else { return Ok(()) };
        prop_assert_eq!(&inst, &generate(&config).unwrap());
        for t in &inst.tasks {
            let d = (t.goals()[0].x - t.starts()[0].x, t.goals()[0].y - t.starts()[0].y);
            for (s, g) in t.starts().iter().zip(t.goals()) {
                prop_assert_eq!((g.x - s.x, g.y - s.y), d);
                prop_assert!(inst.map.is_passable(*s) && inst.map.is_passable(*g));
            }
            prop_assert!(TaskSpec::new(t.id, t.starts().to_vec(), t.goals().to_vec()).is_ok());
        }
    }
}

/// Agents sharing a cell at `t`.
fn detect_all_at(paths: &[Path], t: u32) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        if paths.iter().enumerate().any(|(j, q)| j != i && q.at(t) == p.at(t)) {
            out.push(i);
        }
    }
    out
}

fn tiny(seed: u64, tasks: BTreeMap<usize, usize>, agents: usize) -> Option<Instance> {
    generate(&ScenarioConfig {
        family: Family::Random,
        width: 5,
        height: 5,
        obstacle_density: 0.0,
        task_type_counts: tasks,
        agent_count: agents,
        seed,
    })
    .ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_solver_stays_at_or_above_the_joint_optimum(seed in 0u64..1000) {
        let Some(inst) = tiny(seed, BTreeMap::from([(1, 1), (2, 1)]), 2) else { return Ok(()) };
        let config = OracleConfig { assignment_cap: 2, ..OracleConfig::default() };
        let Ok(best) = brute_force_optimal(&inst, &config) else { return Ok(()) };
        for algo in Algorithm::ALL {
            let Ok(sol) = solve(&inst, algo, Expansion::Incremental, Resolver::Sym, Limits::with_timeout(20.0)) else {
                continue;
            };
            prop_assert!(validate(&inst, &sol).is_empty(), "{algo} emitted an invalid plan");
            prop_assert!(sol.soc >= best.soc, "{algo} beat the joint optimum");
            if algo == Algorithm::Optimal {
                prop_assert_eq!(sol.soc, best.soc);
            }
        }
    }

    #[test]
    fn selectors_are_optimal_with_one_task(seed in 0u64..1000, k in 1usize..3) {
        let Some(inst) = tiny(seed, BTreeMap::from([(k, 1)]), 3) else { return Ok(()) };
        let limits = Limits::with_timeout(20.0);
        let opt = solve(&inst, Algorithm::Optimal, Expansion::Incremental, Resolver::Sym, limits).unwrap();
        for algo in [Algorithm::BestTask, Algorithm::WorstTask] {
            let sol = solve(&inst, algo, Expansion::Incremental, Resolver::Sym, limits).unwrap();
            prop_assert_eq!(sol.soc, opt.soc);
        }
    }
}

#[test]
fn random_task_starts_are_uniform() {
    const DRAWS: u64 = 3200;
    let mut counts = BTreeMap::new();
    for seed in 0..DRAWS {
        let inst = tiny(seed, BTreeMap::from([(1, 1)]), 1).unwrap();
        let s = inst.tasks[0].starts()[0];
        *counts.entry(s).or_insert(0u64) += 1;
    }
    let cells = 25.0;
    let p = 1.0 / cells;
    let mean = DRAWS as f64 * p;
    let sigma = (DRAWS as f64 * p * (1.0 - p)).sqrt();
    assert_eq!(counts.len(), 25);
    for (c, &n) in &counts {
        assert!((n as f64 - mean).abs() <= 3.0 * sigma, "{c}: {n} draws, expected {mean:.0} +- {:.0}", 3.0 * sigma);
    }
}
