mod render;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cttapf::bench::{records_csv, run_suite, BenchPlan};
use cttapf::conflict::Resolver;
use cttapf::domain::{Instance, Status};
use cttapf::oracle::{brute_force_optimal, validate, OracleConfig, OracleError};
use cttapf::scen::{
    generate, read_map, read_scenario, read_solution, solution_json, write_map, write_scenario,
    Family, ScenarioConfig,
};
use cttapf::search::{Expansion, Limits};
use cttapf::subopt::{solve, Algorithm};

#[derive(Debug, Parser)]
#[command(name = "cttapf", version, about = "Cooperative transportation task allocation and path finding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance and write a `.sol.json`.
    Solve(SolveArgs),
    /// Generate a map and scenario.
    Generate(GenerateArgs),
    /// Run a benchmark plan (JSON) and write the report.
    Bench(BenchArgs),
    /// Check a solution file against its instance.
    Validate(ValidateArgs),
    /// Solve a small instance by brute force over joint states.
    Oracle(OracleArgs),
    /// Draw a solution as an SVG.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    scen: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "optimal")]
    algo: Algorithm,
    #[arg(long, default_value = "incremental")]
    expansion: Expansion,
    #[arg(long, default_value = "sym")]
    resolver: Resolver,
    /// Seconds.
    #[arg(long, default_value_t = 500.0)]
    timeout: f64,
    /// Byte budget for the search, e.g. `4G` or `512M`.
    #[arg(long, value_parser = parse_bytes)]
    mem_limit: Option<u64>,
    /// Accepted for symmetry with `generate`; every solver is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to the scenario path with `.sol.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value = "random")]
    scenario_family: Family,
    #[arg(long, default_value_t = 8)]
    width: u32,
    #[arg(long, default_value_t = 8)]
    height: u32,
    #[arg(long, default_value_t = 0.0)]
    obstacle_density: f64,
    /// Tasks per team size, e.g. `1:3,2:1`.
    #[arg(long, value_parser = parse_tasks)]
    tasks: BTreeMap<usize, usize>,
    #[arg(long)]
    agents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes `<out>.map` and `<out>.scen.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Benchmark plan in JSON.
    plan: PathBuf,
    /// Report path; records also go to the same path with a `.csv` extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Solution file to check.
    solution: PathBuf,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    solution: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Non-error results that still warrant a non-zero exit.
enum Verdict {
    Ok,
    Failed,
}

fn parse_tasks(s: &str) -> Result<BTreeMap<usize, usize>, String> {
    let mut out = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, n) = part
            .split_once(':')
            .ok_or_else(|| format!("`{part}` is not of the form k:count"))?;
        let k: usize = k.trim().parse().map_err(|_| format!("bad team size `{k}`"))?;
        let n: usize = n.trim().parse().map_err(|_| format!("bad task count `{n}`"))?;
        *out.entry(k).or_insert(0) += n;
    }
    if out.is_empty() {
        return Err("no tasks given".into());
    }
    Ok(out)
}

fn parse_bytes(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let (digits, scale) = match s.char_indices().last() {
        Some((i, 'K' | 'k')) => (&s[..i], 1 << 10),
        Some((i, 'M' | 'm')) => (&s[..i], 1 << 20),
        Some((i, 'G' | 'g')) => (&s[..i], 1 << 30),
        _ => (s, 1),
    };
    digits
        .parse::<u64>()
        .ok()
        .and_then(|v| v.checked_mul(scale))
        .ok_or_else(|| format!("bad byte count `{s}`"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load(args: &InstanceArgs) -> Result<Instance> {
    let map = read_map(&read(&args.map)?).with_context(|| format!("in {}", args.map.display()))?;
    read_scenario(map, &read(&args.scen)?).with_context(|| format!("in {}", args.scen.display()))
}

fn solution_path(scen: &Path) -> PathBuf {
    let name = scen.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let stem = name.strip_suffix(".scen.json").or_else(|| name.strip_suffix(".json")).unwrap_or(name);
    scen.with_file_name(format!("{stem}.sol.json"))
}

fn run_solve(args: SolveArgs) -> Result<Verdict> {
    let inst = load(&args.instance)?;
    if !(args.timeout.is_finite() && args.timeout >= 0.0) {
        bail!("timeout must be a non-negative number of seconds");
    }
    let limits = Limits {
        timeout: Some(Duration::from_secs_f64(args.timeout)),
        mem_limit: args.mem_limit,
    };
    let outcome = solve(&inst, args.algo, args.expansion, args.resolver, limits);
    let out = args.out.unwrap_or_else(|| solution_path(&args.instance.scen));
    write(&out, &solution_json(&outcome))?;
    let stats = match &outcome {
        Ok(sol) => sol.stats,
        Err(fail) => fail.stats,
    };
    let soc = outcome.as_ref().map_or("-".to_string(), |s| s.soc.to_string());
    println!(
        "status {} soc {soc} runtimeMs {} taskExpansions {} conflictExpansions {}",
        stats.status, stats.runtime_ms, stats.task_expansions, stats.conflict_expansions
    );
    Ok(if outcome.is_ok() { Verdict::Ok } else { Verdict::Failed })
}

fn run_generate(args: GenerateArgs) -> Result<Verdict> {
    let inst = generate(&ScenarioConfig {
        family: args.scenario_family,
        width: args.width,
        height: args.height,
        obstacle_density: args.obstacle_density,
        task_type_counts: args.tasks,
        agent_count: args.agents,
        seed: args.seed,
    })?;
    let prefix = args.out.to_string_lossy();
    write(Path::new(&format!("{prefix}.map")), &write_map(&inst.map))?;
    write(Path::new(&format!("{prefix}.scen.json")), &write_scenario(&inst))?;
    println!("wrote {prefix}.map and {prefix}.scen.json");
    Ok(Verdict::Ok)
}

fn run_bench(args: BenchArgs) -> Result<Verdict> {
    let plan: BenchPlan = serde_json::from_str(&read(&args.plan)?)
        .with_context(|| format!("in {}", args.plan.display()))?;
    let report = run_suite(&plan)?;
    write(&args.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write(&args.out.with_extension("csv"), &records_csv(&report.records))?;
    for lane in &report.lanes {
        println!(
            "{} solved {}/{}",
            lane.triple,
            lane.solved,
            lane.runs
        );
    }
    Ok(Verdict::Ok)
}

fn run_validate(args: ValidateArgs) -> Result<Verdict> {
    let inst = load(&args.instance)?;
    let doc = read_solution(&read(&args.solution)?)
        .with_context(|| format!("in {}", args.solution.display()))?;
    let Some(sol) = doc.to_solution()? else {
        println!("no plan to check: status {}", doc.status);
        return Ok(Verdict::Failed);
    };
    let violations = validate(&inst, &sol);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("valid, soc {}", sol.soc);
        Ok(Verdict::Ok)
    } else {
        println!("{} violations", violations.len());
        Ok(Verdict::Failed)
    }
}

fn run_oracle(args: OracleArgs) -> Result<Verdict> {
    let inst = load(&args.instance)?;
    let config = OracleConfig {
        assignment_cap: inst.tasks.len().max(1),
        ..OracleConfig::default()
    };
    match brute_force_optimal(&inst, &config) {
        Ok(mut sol) => {
            sol.stats.status = Status::Solved;
            if let Some(out) = &args.out {
                write(out, &solution_json(&Ok(sol.clone())))?;
            }
            println!("status solved soc {}", sol.soc);
            Ok(Verdict::Ok)
        }
        Err(err @ OracleError::Unsupported) => Err(err.into()),
        Err(err) => {
            println!("status failed: {err}");
            Ok(Verdict::Failed)
        }
    }
}

fn run_render(args: RenderArgs) -> Result<Verdict> {
    let inst = load(&args.instance)?;
    let doc = read_solution(&read(&args.solution)?)
        .with_context(|| format!("in {}", args.solution.display()))?;
    let Some(sol) = doc.to_solution()? else {
        bail!("{} holds no plan (status {})", args.solution.display(), doc.status);
    };
    write(&args.out, &render::svg(&inst, &sol))?;
    Ok(Verdict::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Generate(a) => run_generate(a),
        Command::Bench(a) => run_bench(a),
        Command::Validate(a) => run_validate(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Render(a) => run_render(a),
    };
    match result {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Failed) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_lists() {
        assert_eq!(parse_tasks("1:3, 2:1").unwrap(), BTreeMap::from([(1, 3), (2, 1)]));
        assert!(parse_tasks("1-3").is_err());
        assert!(parse_tasks("").is_err());
    }

    #[test]
    fn byte_counts() {
        assert_eq!(parse_bytes("512").unwrap(), 512);
        assert_eq!(parse_bytes("4G").unwrap(), 4 << 30);
        assert!(parse_bytes("lots").is_err());
    }

    #[test]
    fn solution_next_to_scenario() {
        assert_eq!(solution_path(Path::new("d/a.scen.json")), PathBuf::from("d/a.sol.json"));
    }
}
