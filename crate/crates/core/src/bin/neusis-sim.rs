use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use neusis_sim::ablate::{self, Table};
use neusis_sim::coverage::CoverageMode;
use neusis_sim::eval;
use neusis_sim::mission::{generate_scenario, write_scenario, GeneratorConfig};
use neusis_sim::runner::{
    env_threads, run_batch, run_mission_file, scenario_name, seed_sweep, write_atomic, BatchJob,
    MissionConfig, MissionTrace, ScenarioSource,
};
use neusis_sim::selection::SelectionMode;
use neusis_sim::world::Accumulation;
use neusis_sim::{Error, Result};

#[derive(Parser)]
#[command(name = "neusis-sim", version, about = "UAV search-mission simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate scenario files.
    Gen(GenArgs),
    /// Run one mission and write its trace.
    Run(RunArgs),
    /// Run many missions in parallel.
    Batch(BatchArgs),
    /// Score traces into CSV and markdown.
    Eval(EvalArgs),
    /// Run (or re-score) an ablation grid.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of scenarios (seeds `seed`, `seed + 1`, ...).
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Output file (count 1) or directory.
    #[arg(long)]
    out: PathBuf,
    /// JSON file with generator settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct MissionFlags {
    #[arg(long, value_parser = ["clear", "night", "fog", "perfect"])]
    sensor_preset: Option<String>,
    #[arg(long)]
    report_threshold: Option<f64>,
    #[arg(long)]
    gate_radius: Option<f64>,
    #[arg(long, value_parser = ["off", "naive", "bayes"])]
    accumulation: Option<String>,
    #[arg(long, value_parser = ["optimal", "greedy", "random"])]
    selection: Option<String>,
    #[arg(long, value_parser = ["snac", "boustrophedon"])]
    coverage: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    time_quantum: Option<f64>,
    #[arg(long)]
    altitude: Option<f64>,
    #[arg(long)]
    speed: Option<f64>,
    #[arg(long)]
    inflation_margin: Option<f64>,
    #[arg(long)]
    grid_resolution: Option<f64>,
    #[arg(long)]
    frame_period: Option<f64>,
    /// Mission seed (defaults to the scenario's).
    #[arg(long)]
    seed: Option<u64>,
    /// Also replan whenever an EOI is confirmed.
    #[arg(long)]
    replan_on_found: bool,
}

impl MissionFlags {
    fn config(&self) -> Result<MissionConfig> {
        let mut c = MissionConfig {
            sensor_preset: self.sensor_preset.clone(),
            seed: self.seed,
            ..Default::default()
        };
        if let Some(x) = self.report_threshold {
            c.world.report_threshold = x;
        }
        if let Some(x) = self.gate_radius {
            c.world.gate_radius = x;
        }
        if let Some(a) = &self.accumulation {
            c.world.accumulation = Accumulation::parse(a)?;
        }
        if let Some(s) = &self.selection {
            c.selection = SelectionMode::parse(s)?;
        }
        if let Some(s) = &self.coverage {
            c.coverage = CoverageMode::parse(s)?;
        }
        c.lambda = self.lambda;
        if let Some(x) = self.time_quantum {
            c.time_quantum = x;
        }
        if let Some(x) = self.altitude {
            c.nav.altitude = x;
        }
        if let Some(x) = self.speed {
            c.nav.speed = x;
        }
        if let Some(x) = self.inflation_margin {
            c.nav.inflation_margin = x;
        }
        if let Some(x) = self.grid_resolution {
            c.grid_resolution = x;
        }
        c.frame_period = self.frame_period;
        c.replan_on_found = self.replan_on_found;
        c.check()?;
        Ok(c)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for the trace.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    flags: MissionFlags,
}

#[derive(Args)]
struct BatchArgs {
    /// Scenario files; alternatively use --generate.
    #[arg(long, num_args = 1..)]
    scenarios: Vec<PathBuf>,
    /// Generate this many scenarios instead (seeds seed-base + i).
    #[arg(long)]
    generate: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    flags: MissionFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory searched recursively for `*.jsonl` traces.
    #[arg(long)]
    traces: PathBuf,
    #[arg(long, default_value_t = eval::DEFAULT_RADIUS)]
    gt_radius: f64,
    /// Output prefix; writes `<prefix>.csv` and `<prefix>.md`.
    #[arg(long, default_value = "metrics")]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long, value_parser = ["full", "world-model", "planner"])]
    table: String,
    #[arg(long, default_value_t = 12)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long)]
    out: PathBuf,
    /// Re-score traces already under `--out` instead of running missions.
    #[arg(long)]
    from_traces: bool,
    /// JSON file with generator settings.
    #[arg(long)]
    gen_config: Option<PathBuf>,
}

fn gen_config(path: Option<&Path>) -> Result<GeneratorConfig> {
    let Some(p) = path else {
        return Ok(GeneratorConfig::default());
    };
    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
    let cfg: GeneratorConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
    cfg.check()?;
    Ok(cfg)
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let cfg = gen_config(a.config.as_deref())?;
    for i in 0..a.count {
        let seed = a.seed + i as u64;
        let s = generate_scenario(seed, &cfg)?;
        let path = if a.count == 1 && a.out.extension().is_some() {
            a.out.clone()
        } else {
            a.out.join(format!("gen-{seed}.scenario"))
        };
        write_atomic(&path, write_scenario(&s).as_bytes())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn summary_line(name: &str, t: &MissionTrace) -> String {
    let found = t
        .records
        .iter()
        .find_map(|r| match r {
            neusis_sim::runner::TraceRecord::Outcome { found, t_end, .. } => Some((
                found.iter().filter(|f| f.found).count(),
                found.len(),
                *t_end,
            )),
            _ => None,
        })
        .unwrap_or((0, 0, 0.0));
    format!(
        "{name}: {} at t={:.1}s, {}/{} EOIs confirmed, {} frames",
        t.end_reason().map(|r| format!("{r:?}")).unwrap_or_default(),
        found.2,
        found.0,
        found.1,
        t.frames().count()
    )
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = a.flags.config()?;
    let t = run_mission_file(&a.scenario, &cfg)?;
    let name = scenario_name(&a.scenario);
    let path = a.out.join(format!("{name}.jsonl"));
    t.write(&path)?;
    println!("{}", summary_line(&name, &t));
    println!("trace: {}", path.display());
    if let Some(v) = t.violation() {
        return Err(Error::Invariant(v.to_string()));
    }
    Ok(())
}

fn cmd_batch(a: BatchArgs) -> Result<()> {
    let cfg = a.flags.config()?;
    let jobs: Vec<BatchJob> = match a.generate {
        Some(n) => seed_sweep(a.seed_base, n, &GeneratorConfig::default(), &[cfg]),
        None if a.scenarios.is_empty() => {
            return Err(Error::Config(
                "batch needs --scenarios or --generate".into(),
            ))
        }
        None => a
            .scenarios
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut config = cfg.clone();
                config.seed = Some(cfg.seed.unwrap_or(a.seed_base) + i as u64);
                BatchJob {
                    name: scenario_name(p),
                    source: ScenarioSource::File(p.clone()),
                    config,
                }
            })
            .collect(),
    };
    let results = run_batch(&jobs, env_threads()?)?;
    let mut failures = 0;
    let mut violation = None;
    for (i, (job, r)) in jobs.iter().zip(results).enumerate() {
        match r {
            Ok(t) => {
                let path = a.out.join(format!("{i:03}-{}.jsonl", job.name));
                t.write(&path)?;
                println!("{}", summary_line(&job.name, &t));
                if let Some(v) = t.violation() {
                    violation.get_or_insert_with(|| format!("{}: {v}", job.name));
                }
            }
            Err(e) => {
                failures += 1;
                eprintln!("{}: failed: {e}", job.name);
            }
        }
    }
    println!("{} missions, {} failed", jobs.len(), failures);
    match violation {
        Some(v) => Err(Error::Invariant(v)),
        None => Ok(()),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    if !(a.gt_radius > 0.0) {
        return Err(Error::Config("--gt-radius must be positive".into()));
    }
    let traces = eval::load_traces(&a.traces)?;
    if traces.is_empty() {
        return Err(Error::Config(format!(
            "no traces under {}",
            a.traces.display()
        )));
    }
    let rows: Vec<_> = eval::group_by_cell(traces)
        .into_iter()
        .map(|(cell, ts)| (cell.clone(), eval::summarize(&cell, &ts, a.gt_radius)))
        .collect();
    let csv = a.out.with_extension("csv");
    let md = a.out.with_extension("md");
    write_atomic(&csv, eval::to_csv(&rows).as_bytes())?;
    let table = eval::to_markdown(&rows);
    write_atomic(&md, table.as_bytes())?;
    print!("{table}");
    Ok(())
}

fn cmd_ablate(a: AblateArgs) -> Result<()> {
    let table = Table::parse(&a.table)?;
    let run = if a.from_traces {
        ablate::evaluate_ablation(table, &a.out)?
    } else {
        let gen = gen_config(a.gen_config.as_deref())?;
        ablate::run_ablation(table, a.seeds, a.seed_base, &gen, &a.out, env_threads()?)?
    };
    for (job, e) in &run.failures {
        eprintln!("{job}: failed: {e}");
    }
    print!(
        "{}",
        std::fs::read_to_string(&run.markdown).map_err(|e| Error::io(&run.markdown, e))?
    );
    println!("csv: {}", run.csv.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Batch(a) => cmd_batch(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Ablate(a) => cmd_ablate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
