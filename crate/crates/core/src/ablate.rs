//! Ablation grids: fixed sets of mission configurations that differ along one
//! axis, run over a seed sweep of generated scenarios and scored into CSV and markdown.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::coverage::CoverageMode;
use crate::error::{Error, Result};
use crate::eval::{self, MetricsSummary};
use crate::mission::GeneratorConfig;
use crate::runner::{run_batch, seed_sweep, write_atomic, MissionConfig, MissionTrace};
use crate::selection::SelectionMode;
use crate::sensor::NoiseMix;
use crate::world::Accumulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    /// Planning x perception x world model.
    Full,
    /// World-model accumulation.
    WorldModel,
    /// Planner components under perfect perception.
    Planner,
}

impl Table {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "world-model" => Ok(Self::WorldModel),
            "planner" => Ok(Self::Planner),
            _ => Err(Error::Config(format!(
                "unknown ablation table `{s}` (full|world-model|planner)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::WorldModel => "world-model",
            Self::Planner => "planner",
        }
    }

    /// Ground-truth match radius used to score this table.
    pub fn radius(self) -> f64 {
        match self {
            Self::Planner => 25.0,
            _ => eval::DEFAULT_RADIUS,
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub config: MissionConfig,
}

/// Heterogeneous measurement noise for the world-model table: each frame is
/// either sharp or badly blurred.
pub const MIXED_NOISE: NoiseMix = NoiseMix {
    sigma: 3.0,
    prob: 0.5,
};
pub const MIXED_NOISE_BASE_SIGMA: f64 = 0.5;

fn planner(selection: SelectionMode, coverage: CoverageMode) -> MissionConfig {
    MissionConfig {
        selection,
        coverage,
        ..MissionConfig::default()
    }
}

fn cell(label: &str, mut config: MissionConfig, sensor: &str, acc: Accumulation) -> Cell {
    config.sensor_preset = Some(sensor.to_string());
    config.world.accumulation = acc;
    Cell {
        label: label.to_string(),
        config,
    }
}

pub fn grid(table: Table) -> Vec<Cell> {
    use Accumulation::*;
    use CoverageMode::*;
    use SelectionMode::*;
    let baseline = planner(Random, Boustrophedon);
    let full = planner(Optimal, Snac);
    match table {
        Table::Planner => vec![
            cell("Baseline", baseline, "perfect", Bayes),
            cell(
                "+ AOI Selection",
                planner(Greedy, Boustrophedon),
                "perfect",
                Bayes,
            ),
            cell(
                "+ Optimization",
                planner(Optimal, Boustrophedon),
                "perfect",
                Bayes,
            ),
            cell("+ Area coverage", full, "perfect", Bayes),
        ],
        Table::WorldModel => [
            ("World reasoning", Off),
            ("+ Naive accumulation", Naive),
            ("+ Bayesian filtering", Bayes),
        ]
        .into_iter()
        .map(|(label, acc)| {
            let mut c = cell(label, full.clone(), "clear", acc);
            c.config.position_sigma = Some(MIXED_NOISE_BASE_SIGMA);
            c.config.noise_mix = Some(MIXED_NOISE);
            c
        })
        .collect(),
        Table::Full => vec![
            cell(
                "Baseline planner / weak perception / no world model",
                baseline.clone(),
                "night",
                Off,
            ),
            cell(
                "Full planner / weak perception / no world model",
                full.clone(),
                "night",
                Off,
            ),
            cell(
                "Baseline planner / clear perception / no world model",
                baseline.clone(),
                "clear",
                Off,
            ),
            cell(
                "Baseline planner / clear perception / world model",
                baseline,
                "clear",
                Bayes,
            ),
            cell(
                "Full planner / clear perception / no world model",
                full.clone(),
                "clear",
                Off,
            ),
            cell(
                "Full planner / clear perception / world model",
                full,
                "clear",
                Bayes,
            ),
        ],
    }
}

/// Where the traces of cell `index` live under an ablation output directory.
pub fn cell_dir(out: &Path, index: usize) -> PathBuf {
    out.join("traces").join(format!("cell{index:02}"))
}

#[derive(Debug, Clone)]
pub struct AblationRun {
    pub rows: Vec<(String, MetricsSummary)>,
    /// (job name, error) for missions that failed.
    pub failures: Vec<(String, String)>,
    pub csv: PathBuf,
    pub markdown: PathBuf,
}

/// Runs `table` over `seeds` generated scenarios starting at `seed_base`,
/// writes the traces under `out/traces`, then scores them.
pub fn run_ablation(
    table: Table,
    seeds: usize,
    seed_base: u64,
    gen: &GeneratorConfig,
    out: &Path,
    threads: Option<usize>,
) -> Result<AblationRun> {
    let cells = grid(table);
    let configs: Vec<MissionConfig> = cells.iter().map(|c| c.config.clone()).collect();
    let jobs = seed_sweep(seed_base, seeds, gen, &configs);
    let results = run_batch(&jobs, threads)?;
    let mut failures = Vec::new();
    for (k, (job, res)) in jobs.iter().zip(results).enumerate() {
        let ci = k % cells.len();
        match res {
            Ok(trace) => trace.write(&cell_dir(out, ci).join(format!("{}.jsonl", job.name)))?,
            Err(e) => failures.push((format!("{} [{}]", job.name, cells[ci].label), e.to_string())),
        }
    }
    let mut run = evaluate_ablation(table, out)?;
    run.failures = failures;
    Ok(run)
}

/// Scores stored traces of `table` under `out/traces` and (re)writes
/// `out/<table>.csv` and `out/<table>.md`.
pub fn evaluate_ablation(table: Table, out: &Path) -> Result<AblationRun> {
    let cells = grid(table);
    let mut rows = Vec::new();
    for (ci, c) in cells.iter().enumerate() {
        let dir = cell_dir(out, ci);
        let traces: Vec<MissionTrace> = if dir.exists() {
            eval::load_traces(&dir)?
        } else {
            Vec::new()
        };
        rows.push((
            c.label.clone(),
            eval::summarize(&c.config.cell(), &traces, table.radius()),
        ));
    }
    let csv = out.join(format!("{}.csv", table.name()));
    let markdown = out.join(format!("{}.md", table.name()));
    write_atomic(&csv, eval::to_csv(&rows).as_bytes())?;
    let md = format!(
        "Ablation {} ({} m match radius)\n\n{}",
        table.name(),
        table.radius(),
        eval::to_markdown(&rows)
    );
    write_atomic(&markdown, md.as_bytes())?;
    Ok(AblationRun {
        rows,
        failures: Vec::new(),
        csv,
        markdown,
    })
}
