//! Incremental benchmark protocol: instances grow one task at a time until a
//! solver fails, with run records and aggregate metrics.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::conflict::Resolver;
use crate::domain::{Instance, Status};
use crate::scen::{generate_sized, Family, ScenError, ScenarioConfig};
use crate::search::{Expansion, Limits};
use crate::subopt::{solve, Algorithm};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench plan: {0}")]
    Plan(String),
    #[error("could not build the worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

mod token {
    use super::*;

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr<Err = String>,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One solver configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgoTriple {
    #[serde(with = "token")]
    pub algo: Algorithm,
    #[serde(with = "token")]
    pub expansion: Expansion,
    #[serde(with = "token")]
    pub resolver: Resolver,
}

impl AlgoTriple {
    pub fn new(algo: Algorithm, expansion: Expansion, resolver: Resolver) -> Self {
        AlgoTriple {
            algo,
            expansion,
            resolver,
        }
    }
}

impl fmt::Display for AlgoTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.algo, self.expansion, self.resolver)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchPlan {
    #[serde(with = "token")]
    pub family: Family,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub obstacle_density: f64,
    /// Share of tasks per team size.
    pub target_type_ratio: BTreeMap<usize, f64>,
    /// Agents per task slot.
    pub task_agent_ratio: f64,
    pub max_tasks: usize,
    #[serde(default)]
    pub max_agents: Option<usize>,
    pub seeds: Vec<u64>,
    pub timeout_seconds: f64,
    #[serde(default)]
    pub mem_limit_bytes: Option<u64>,
    pub algorithms: Vec<AlgoTriple>,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub parallelism: Option<usize>,
}

impl BenchPlan {
    pub fn check(&self) -> Result<(), BenchError> {
        let fail = |m: String| Err(BenchError::Plan(m));
        let sum: f64 = self.target_type_ratio.values().sum();
        if self.target_type_ratio.is_empty() || (sum - 1.0).abs() > 1e-6 {
            return fail(format!("type ratios must sum to 1, got {sum}"));
        }
        if self.target_type_ratio.contains_key(&0) || self.target_type_ratio.values().any(|&r| r < 0.0) {
            return fail("type ratios need k >= 1 and non-negative shares".into());
        }
        if self.timeout_seconds.is_nan() || self.timeout_seconds <= 0.0 {
            return fail("timeout must be positive".into());
        }
        if self.task_agent_ratio.is_nan() || self.task_agent_ratio <= 0.0 {
            return fail("task-agent ratio must be positive".into());
        }
        if self.algorithms.is_empty() || self.seeds.is_empty() || self.max_tasks == 0 {
            return fail("need at least one algorithm, seed and task".into());
        }
        let max_k = *self.target_type_ratio.keys().max().unwrap();
        if self.max_agents.is_some_and(|m| m < max_k) {
            return fail(format!("max agents below the largest team size {max_k}"));
        }
        Ok(())
    }

    fn limits(&self) -> Limits {
        Limits {
            mem_limit: self.mem_limit_bytes,
            ..Limits::with_timeout(self.timeout_seconds)
        }
    }

    /// Agent count for an instance with `slots` task slots.
    pub fn agents_for(&self, slots: usize, max_k: usize) -> usize {
        let scaled = (slots as f64 * self.task_agent_ratio).round() as usize;
        let capped = self.max_agents.map_or(scaled, |m| scaled.min(m));
        capped.max(max_k)
    }

    /// Team sizes of the first `max_tasks` tasks.
    pub fn task_sequence(&self) -> Vec<usize> {
        let mut counts = BTreeMap::new();
        (0..self.max_tasks)
            .map(|_| {
                let k = next_task_type(&counts, &self.target_type_ratio);
                *counts.entry(k).or_insert(0) += 1;
                k
            })
            .collect()
    }
}

/// Team size whose share lags its target most; ties go to the smaller size.
pub fn next_task_type(counts: &BTreeMap<usize, usize>, ratio: &BTreeMap<usize, f64>) -> usize {
    let total: usize = counts.values().sum();
    let share = |k: &usize| {
        if total == 0 {
            0.0
        } else {
            *counts.get(k).unwrap_or(&0) as f64 / total as f64
        }
    };
    let mut best: Option<(usize, f64)> = None;
    for (k, r) in ratio {
        let deficit = r - share(k);
        if best.is_none_or(|(_, d)| deficit > d + 1e-12) {
            best = Some((*k, deficit));
        }
    }
    best.expect("non-empty ratio").0
}

/// Orders exact per-size task counts by the deficit rule.
pub fn interleave(counts: &BTreeMap<usize, usize>) -> Vec<usize> {
    let total: usize = counts.values().sum();
    if total == 0 {
        return Vec::new();
    }
    let ratio: BTreeMap<usize, f64> = counts
        .iter()
        .map(|(&k, &n)| (k, n as f64 / total as f64))
        .collect();
    let mut used: BTreeMap<usize, usize> = BTreeMap::new();
    (0..total)
        .map(|_| {
            let open: BTreeMap<usize, f64> = ratio
                .iter()
                .filter(|(k, _)| used.get(k).copied().unwrap_or(0) < counts[k])
                .map(|(&k, &r)| (k, r))
                .collect();
            let k = next_task_type(&used, &open);
            *used.entry(k).or_insert(0) += 1;
            k
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub instance_id: String,
    pub seed: u64,
    pub tasks: usize,
    pub agents: usize,
    #[serde(flatten)]
    pub triple: AlgoTriple,
    pub status: Status,
    pub soc: Option<u64>,
    pub runtime_ms: u64,
    pub task_expansions: u64,
    pub conflict_expansions: u64,
    /// Percent above the optimal cost of the same instance, when known.
    pub gap_percent: Option<f64>,
}

pub const CSV_HEADER: &str = "instance_id,seed,tasks,agents,algo,expansion,resolver,status,soc,runtime_ms,task_expansions,conflict_expansions,gap_percent";

pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.instance_id,
            r.seed,
            r.tasks,
            r.agents,
            r.triple.algo,
            r.triple.expansion,
            r.triple.resolver,
            r.status,
            r.soc.map(|s| s.to_string()).unwrap_or_default(),
            r.runtime_ms,
            r.task_expansions,
            r.conflict_expansions,
            r.gap_percent.map(|g| format!("{g:.4}")).unwrap_or_default(),
        );
    }
    out
}

/// Aggregates for one solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LaneSummary {
    pub triple: AlgoTriple,
    pub runs: usize,
    pub solved: usize,
    /// Solved fraction of the runs attempted at each task count.
    pub success_by_tasks: BTreeMap<usize, f64>,
    pub total_task_expansions: u64,
    pub total_conflict_expansions: u64,
    pub mean_task_expansions: Option<f64>,
    pub median_task_expansions: Option<f64>,
    pub mean_conflict_expansions: Option<f64>,
    pub median_conflict_expansions: Option<f64>,
    /// Median of task / conflict expansions over solved runs with at least
    /// one conflict expansion.
    pub median_expansion_ratio: Option<f64>,
    pub mean_gap_percent: Option<f64>,
    pub median_gap_percent: Option<f64>,
    pub max_gap_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchReport {
    pub records: Vec<RunRecord>,
    pub lanes: Vec<LaneSummary>,
    /// Seeds whose instance could not be generated.
    pub generation_errors: Vec<String>,
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

fn gap(soc: u64, opt: u64) -> f64 {
    if opt == 0 {
        if soc == 0 { 0.0 } else { f64::INFINITY }
    } else {
        100.0 * (soc as f64 - opt as f64) / opt as f64
    }
}

/// Restricts a generated instance to its first `tasks` tasks and `agents`
/// agents.
pub fn prefix(full: &Instance, tasks: usize, agents: usize) -> Result<Instance, ScenError> {
    Ok(Instance::new(
        full.map.clone(),
        full.agents[..agents].to_vec(),
        full.tasks[..tasks].to_vec(),
    )?)
}

fn run_seed(plan: &BenchPlan, seed: u64) -> Result<Vec<RunRecord>, String> {
    let sizes = plan.task_sequence();
    let max_k = *sizes.iter().max().unwrap();
    let full_agents = plan.agents_for(sizes.iter().sum(), max_k);
    let cfg = ScenarioConfig {
        family: plan.family,
        width: plan.width,
        height: plan.height,
        obstacle_density: plan.obstacle_density,
        task_type_counts: BTreeMap::new(),
        agent_count: full_agents,
        seed,
    };
    let full = generate_sized(&cfg, &sizes).map_err(|e| format!("seed {seed}: {e}"))?;
    let mut records = Vec::new();
    let mut lanes_alive = vec![true; plan.algorithms.len()];
    for n in 1..=plan.max_tasks {
        let slots: usize = sizes[..n].iter().sum();
        let k_max = *sizes[..n].iter().max().unwrap();
        let agents = plan.agents_for(slots, k_max);
        let inst = prefix(&full, n, agents).map_err(|e| format!("seed {seed}: {e}"))?;
        let first = records.len();
        for (lane, triple) in plan.algorithms.iter().enumerate() {
            if !lanes_alive[lane] {
                continue;
            }
            let outcome = solve(&inst, triple.algo, triple.expansion, triple.resolver, plan.limits());
            let (status, soc, stats) = match &outcome {
                Ok(sol) => (Status::Solved, Some(sol.soc), sol.stats),
                Err(f) => (f.status, None, f.stats),
            };
            lanes_alive[lane] = status == Status::Solved;
            records.push(RunRecord {
                instance_id: format!("s{seed}-t{n}"),
                seed,
                tasks: n,
                agents,
                triple: *triple,
                status,
                soc,
                runtime_ms: stats.runtime_ms,
                task_expansions: stats.task_expansions,
                conflict_expansions: stats.conflict_expansions,
                gap_percent: None,
            });
        }
        let optimum = records[first..]
            .iter()
            .filter(|r| r.triple.algo == Algorithm::Optimal)
            .find_map(|r| r.soc);
        if let Some(opt) = optimum {
            for r in &mut records[first..] {
                r.gap_percent = r.soc.map(|s| gap(s, opt));
            }
        }
        if !lanes_alive.iter().any(|&a| a) {
            break;
        }
    }
    Ok(records)
}

pub fn summarize(triple: AlgoTriple, records: &[RunRecord]) -> LaneSummary {
    let mine: Vec<&RunRecord> = records.iter().filter(|r| r.triple == triple).collect();
    let solved: Vec<&RunRecord> = mine.iter().copied().filter(|r| r.status == Status::Solved).collect();
    let mut success_by_tasks = BTreeMap::new();
    let mut attempts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in &mine {
        let e = attempts.entry(r.tasks).or_default();
        e.0 += 1;
        e.1 += usize::from(r.status == Status::Solved);
    }
    for (n, (runs, ok)) in attempts {
        success_by_tasks.insert(n, ok as f64 / runs as f64);
    }
    let task: Vec<f64> = solved.iter().map(|r| r.task_expansions as f64).collect();
    let conflict: Vec<f64> = solved.iter().map(|r| r.conflict_expansions as f64).collect();
    let ratios: Vec<f64> = solved
        .iter()
        .filter(|r| r.conflict_expansions > 0)
        .map(|r| r.task_expansions as f64 / r.conflict_expansions as f64)
        .collect();
    let gaps: Vec<f64> = solved.iter().filter_map(|r| r.gap_percent).collect();
    LaneSummary {
        triple,
        runs: mine.len(),
        solved: solved.len(),
        success_by_tasks,
        total_task_expansions: mine.iter().map(|r| r.task_expansions).sum(),
        total_conflict_expansions: mine.iter().map(|r| r.conflict_expansions).sum(),
        mean_task_expansions: mean(&task),
        median_task_expansions: median(&task),
        mean_conflict_expansions: mean(&conflict),
        median_conflict_expansions: median(&conflict),
        median_expansion_ratio: median(&ratios),
        mean_gap_percent: mean(&gaps),
        median_gap_percent: median(&gaps),
        max_gap_percent: gaps.iter().copied().reduce(f64::max),
    }
}

/// Runs every seed (in parallel) and every configuration on the growing
/// instances of that seed.
pub fn run_suite(plan: &BenchPlan) -> Result<BenchReport, BenchError> {
    plan.check()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = plan.parallelism {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let per_seed: Vec<Result<Vec<RunRecord>, String>> =
        pool.install(|| plan.seeds.par_iter().map(|&s| run_seed(plan, s)).collect());
    let mut records = Vec::new();
    let mut generation_errors = Vec::new();
    for r in per_seed {
        match r {
            Ok(mut v) => records.append(&mut v),
            Err(e) => generation_errors.push(e),
        }
    }
    let lanes = plan.algorithms.iter().map(|&t| summarize(t, &records)).collect();
    Ok(BenchReport {
        records,
        lanes,
        generation_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(pairs: &[(usize, f64)]) -> BTreeMap<usize, f64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn ties_go_to_the_smaller_size() {
        let r = ratio(&[(1, 0.5), (2, 0.5)]);
        assert_eq!(next_task_type(&BTreeMap::new(), &r), 1);
        assert_eq!(next_task_type(&BTreeMap::from([(1, 1)]), &r), 2);
    }

    #[test]
    fn nine_three_two_one_over_fifteen_tasks() {
        let r = ratio(&[(1, 9.0 / 15.0), (2, 3.0 / 15.0), (3, 2.0 / 15.0), (4, 1.0 / 15.0)]);
        let mut counts = BTreeMap::new();
        for _ in 0..15 {
            *counts.entry(next_task_type(&counts, &r)).or_insert(0) += 1;
        }
        assert_eq!(counts, BTreeMap::from([(1, 9), (2, 3), (3, 2), (4, 1)]));
    }

    #[test]
    fn interleave_keeps_exact_counts() {
        let counts = BTreeMap::from([(1, 5), (2, 2), (4, 1)]);
        let seq = interleave(&counts);
        assert_eq!(seq.len(), 8);
        for (k, n) in &counts {
            assert_eq!(seq.iter().filter(|&&x| x == *k).count(), *n);
        }
        assert_eq!(seq[0], 1);
    }

    #[test]
    fn statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(mean(&[]), None);
        assert_eq!(gap(12, 10), 20.0);
    }

    fn plan() -> BenchPlan {
        BenchPlan {
            family: Family::Random,
            width: 6,
            height: 6,
            obstacle_density: 0.0,
            target_type_ratio: ratio(&[(1, 1.0)]),
            task_agent_ratio: 1.0,
            max_tasks: 2,
            max_agents: None,
            seeds: vec![1, 2],
            timeout_seconds: 10.0,
            mem_limit_bytes: None,
            algorithms: vec![
                AlgoTriple::new(Algorithm::Optimal, Expansion::Incremental, Resolver::Sym),
                AlgoTriple::new(Algorithm::GreedyPp, Expansion::Incremental, Resolver::Sym),
            ],
            parallelism: Some(2),
        }
    }

    #[test]
    fn small_suite_is_solved_at_every_size() {
        let report = run_suite(&plan()).unwrap();
        assert!(report.generation_errors.is_empty());
        let opt = &report.lanes[0];
        assert_eq!(opt.runs, 4);
        assert!(opt.success_by_tasks.values().all(|&s| s == 1.0));
        assert!(report
            .records
            .iter()
            .filter(|r| r.triple.algo == Algorithm::Optimal)
            .all(|r| r.gap_percent == Some(0.0)));
        let total: u64 = report.records.iter().map(|r| r.task_expansions).sum();
        assert_eq!(total, report.lanes.iter().map(|l| l.total_task_expansions).sum::<u64>());
        let csv = records_csv(&report.records);
        assert_eq!(csv.lines().count(), report.records.len() + 1);
    }

    #[test]
    fn plan_round_trips_through_json() {
        let p = plan();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"algo\":\"greedy-pp\""));
        assert!(text.contains("taskAgentRatio"));
        assert_eq!(serde_json::from_str::<BenchPlan>(&text).unwrap(), p);
    }

    #[test]
    fn bad_plans_are_rejected() {
        let mut p = plan();
        p.target_type_ratio = ratio(&[(1, 0.5)]);
        assert!(p.check().is_err());
        let mut p = plan();
        p.timeout_seconds = 0.0;
        assert!(p.check().is_err());
    }
}
