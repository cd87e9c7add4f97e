//! The mission loop: select, fly, cover, update beliefs, repeat. Produces a
//! line-delimited trace that the evaluation module scores.

use std::fs;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{run_coverage, CoverageMode, CoverageState};
use crate::error::{Error, Result};
use crate::flight::{Flyer, MissionHooks};
use crate::geometry::{Point2, Polygon2};
use crate::mission::{generate_scenario, load_scenario, GeneratorConfig, Scenario};
use crate::navigation::{NavConfig, Navigator, Path};
use crate::selection::{self, full_coverage_time, ItineraryPlan, SelectionInstance, SelectionMode};
use crate::sensor::{sense, NoiseMix, Pose, SensorModel, SimRng};
use crate::world::{EoiReport, WorldConfig, WorldModel};

pub const TRACE_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "NEUSIS_SIM_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionConfig {
    /// Overrides the scenario's `[sensor]` section.
    pub sensor_preset: Option<String>,
    /// Overrides the preset's base position noise, meters.
    pub position_sigma: Option<f64>,
    /// Overrides the preset's heterogeneous-noise mixture.
    pub noise_mix: Option<NoiseMix>,
    pub world: WorldConfig,
    pub selection: SelectionMode,
    pub coverage: CoverageMode,
    /// Travel penalty; defaults to 1 / time budget.
    pub lambda: Option<f64>,
    pub time_quantum: f64,
    pub nav: NavConfig,
    pub grid_resolution: f64,
    /// Overrides the sensor's frame period.
    pub frame_period: Option<f64>,
    /// Mission seed; defaults to the scenario seed.
    pub seed: Option<u64>,
    /// Also replan when an EOI is confirmed mid-coverage.
    pub replan_on_found: bool,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            sensor_preset: None,
            position_sigma: None,
            noise_mix: None,
            world: WorldConfig::default(),
            selection: SelectionMode::Optimal,
            coverage: CoverageMode::Snac,
            lambda: None,
            time_quantum: 10.0,
            nav: NavConfig::default(),
            grid_resolution: 20.0,
            frame_period: None,
            seed: None,
            replan_on_found: false,
        }
    }
}

impl MissionConfig {
    pub fn check(&self) -> Result<()> {
        self.world.check()?;
        self.nav.check()?;
        let pos = |x: f64, name: &str| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        pos(self.time_quantum, "time quantum")?;
        pos(self.grid_resolution, "grid resolution")?;
        if let Some(fp) = self.frame_period {
            pos(fp, "frame period")?;
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Config(format!(
                    "lambda must be non-negative, got {l}"
                )));
            }
        }
        if let Some(p) = &self.sensor_preset {
            SensorModel::preset(p)?;
        }
        Ok(())
    }

    /// Sensor actually flown: CLI preset, else the scenario's, else `clear`.
    pub fn sensor_for(&self, s: &Scenario) -> Result<SensorModel> {
        let mut m = match (&self.sensor_preset, &s.sensor) {
            (Some(p), _) => SensorModel::preset(p)?,
            (None, Some(m)) => m.clone(),
            (None, None) => SensorModel::clear(),
        };
        if let Some(sigma) = self.position_sigma {
            m.position_noise_sigma = sigma;
        }
        if let Some(mix) = self.noise_mix {
            m.noise_mix = Some(mix);
        }
        if let Some(fp) = self.frame_period {
            m.frame_period = fp;
        }
        m.check()?;
        Ok(m)
    }

    /// Short name of the ablation cell this configuration belongs to.
    pub fn cell(&self) -> String {
        let mut c = format!(
            "{}+{}+{}+{}",
            self.selection.name(),
            self.coverage.name(),
            self.world.accumulation.name(),
            self.sensor_preset.as_deref().unwrap_or("scenario")
        );
        if self.position_sigma.is_some() || self.noise_mix.is_some() {
            c.push_str("+noise");
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub eoi_id: String,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub scenario: String,
    pub cell: String,
    pub seed: u64,
    pub time_budget: f64,
    pub frame_period: f64,
    pub start: [f64; 2],
    /// The configured start lay inside an inflated obstacle and was moved out.
    pub start_projected: bool,
    pub eois: Vec<TruthRecord>,
    pub config: MissionConfig,
    pub sensor: SensorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegRecord {
    pub aoi: String,
    pub allocated_time: f64,
    pub travel_time: f64,
    pub expected_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub t: f64,
    pub frame: u64,
    /// x, y, z, yaw.
    pub pose: [f64; 4],
    pub detections: usize,
    pub filtered: usize,
    pub tracks: usize,
    pub new_tracks: usize,
    pub pruned: usize,
    pub reports: Vec<EoiReport>,
    pub newly_found: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundRecord {
    pub eoi_id: String,
    pub found: bool,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    EoisFound,
    BudgetExhausted,
    PlanEmpty,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceRecord {
    Header(Header),
    Plan {
        t: f64,
        legs: Vec<LegRecord>,
        expected_gain: f64,
        objective: f64,
        total_time: f64,
        infeasible: bool,
    },
    Path {
        t: f64,
        purpose: String,
        waypoints: Vec<[f64; 2]>,
    },
    Frame(FrameRecord),
    Coverage {
        t: f64,
        aoi: String,
        end: String,
        allocation: f64,
        transit_time: f64,
        time_used: f64,
        fraction_before: f64,
        fraction: f64,
        /// Effective fraction fed to the negative-search update.
        c_eff: f64,
    },
    Violation {
        t: f64,
        message: String,
    },
    Outcome {
        t_end: f64,
        reason: EndReason,
        frames: u64,
        found: Vec<FoundRecord>,
        offline: Vec<EoiReport>,
    },
}

/// Wall-clock figures; kept out of the trace so trace bytes stay deterministic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WallStats {
    pub wall_seconds: f64,
    pub planning_seconds: f64,
    pub replans: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionTrace {
    pub records: Vec<TraceRecord>,
    pub stats: WallStats,
}

impl MissionTrace {
    pub fn header(&self) -> Option<&Header> {
        self.records.iter().find_map(|r| match r {
            TraceRecord::Header(h) => Some(h),
            _ => None,
        })
    }

    pub fn frames(&self) -> impl Iterator<Item = &FrameRecord> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Frame(f) => Some(f),
            _ => None,
        })
    }

    pub fn online_reports(&self) -> impl Iterator<Item = &EoiReport> {
        self.frames().flat_map(|f| f.reports.iter())
    }

    pub fn offline_reports(&self) -> &[EoiReport] {
        self.records
            .iter()
            .find_map(|r| match r {
                TraceRecord::Outcome { offline, .. } => Some(offline.as_slice()),
                _ => None,
            })
            .unwrap_or(&[])
    }

    pub fn end_reason(&self) -> Option<EndReason> {
        self.records.iter().find_map(|r| match r {
            TraceRecord::Outcome { reason, .. } => Some(*reason),
            _ => None,
        })
    }

    pub fn violation(&self) -> Option<&str> {
        self.records.iter().find_map(|r| match r {
            TraceRecord::Violation { message, .. } => Some(message.as_str()),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: TraceRecord = serde_json::from_str(line)
                .map_err(|e| Error::Trace(format!("line {}: {e}", i + 1)))?;
            records.push(r);
        }
        if !matches!(records.first(), Some(TraceRecord::Header(_))) {
            return Err(Error::Trace("trace does not start with a header".into()));
        }
        Ok(Self {
            records,
            stats: WallStats::default(),
        })
    }

    pub fn read(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text)
    }

    /// Writes `path` atomically plus a `.stats.json` sidecar with wall-clock figures.
    pub fn write(&self, path: &FsPath) -> Result<()> {
        write_atomic(path, self.to_jsonl().as_bytes())?;
        let stats = serde_json::to_string_pretty(&self.stats).expect("stats serialize");
        write_atomic(&stats_path(path), stats.as_bytes())
    }
}

pub fn stats_path(trace: &FsPath) -> PathBuf {
    let name = trace
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name.strip_suffix(".jsonl").unwrap_or(&name);
    trace.with_file_name(format!("{stem}.stats.json"))
}

/// Write-then-rename so readers never see a partial file.
pub fn write_atomic(path: &FsPath, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp~");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Frame-level state shared with the flight loop.
struct Sim<'a> {
    scenario: &'a Scenario,
    sensor: SensorModel,
    world: WorldModel,
    rng: SimRng,
    kozs: Vec<Polygon2>,
    records: Vec<TraceRecord>,
    found_at: Vec<Option<f64>>,
    violation: Option<String>,
    found_event: bool,
    frames: u64,
}

impl MissionHooks for Sim<'_> {
    fn on_frame(&mut self, pose: &Pose) -> bool {
        let xy = pose.position.xy();
        if let Some(k) = self.kozs.iter().position(|k| k.contains_strict(xy)) {
            self.violation = Some(format!(
                "pose ({:.3}, {:.3}) at t={} is inside keep-out zone {}",
                xy.x, xy.y, pose.timestamp, self.scenario.kozs[k].id
            ));
            return true;
        }
        if pose.timestamp > self.scenario.time_budget + 1e-9 {
            self.violation = Some(format!("frame at t={} is past the budget", pose.timestamp));
            return true;
        }
        self.frames += 1;
        let frame = self.frames;
        let dets = sense(pose, self.scenario, &self.sensor, frame, &mut self.rng);
        let up = self
            .world
            .process_frame(pose.timestamp, &dets, &self.scenario.occupancy);
        for id in &up.newly_found {
            if let Some(e) = self.scenario.eoi_index(id) {
                self.found_at[e] = Some(pose.timestamp);
            }
            self.found_event = true;
        }
        self.records.push(TraceRecord::Frame(FrameRecord {
            t: pose.timestamp,
            frame,
            pose: [pose.position.x, pose.position.y, pose.position.z, pose.yaw],
            detections: up.received,
            filtered: up.filtered,
            tracks: self.world.tracks().len(),
            new_tracks: up.new_tracks,
            pruned: up.pruned,
            reports: up.reports,
            newly_found: up.newly_found,
        }));
        self.world.all_found()
    }

    fn on_path(&mut self, path: &Path, purpose: &str) {
        let t = self.last_time();
        self.records.push(TraceRecord::Path {
            t,
            purpose: purpose.to_string(),
            waypoints: path.waypoints.iter().map(|p| [p.x, p.y]).collect(),
        });
    }
}

impl Sim<'_> {
    fn last_time(&self) -> f64 {
        self.records
            .iter()
            .rev()
            .find_map(|r| match r {
                TraceRecord::Frame(f) => Some(f.t),
                _ => None,
            })
            .unwrap_or(0.0)
    }

    fn stop(&self) -> bool {
        self.violation.is_some() || self.world.all_found()
    }
}

/// Raster point nearest the AOI centroid; the selection stage measures travel to it.
fn anchor(state: &CoverageState, aoi: &Polygon2) -> Option<Point2> {
    let c = aoi.centroid();
    state
        .open
        .iter()
        .chain(state.visited.iter())
        .copied()
        .min_by(|a, b| a.dist(c).total_cmp(&b.dist(c)).then(a.lex_cmp(b)))
}

/// Runs one mission on `scenario`. `name` labels the trace header.
pub fn run_mission(scenario: &Scenario, cfg: &MissionConfig, name: &str) -> Result<MissionTrace> {
    let wall = Instant::now();
    cfg.check()?;
    let sensor = cfg.sensor_for(scenario)?;
    let seed = cfg.seed.unwrap_or(scenario.seed);
    let budget = scenario.time_budget;
    let lambda = cfg
        .lambda
        .unwrap_or(if budget > 0.0 { 1.0 / budget } else { 0.0 });
    let q = sensor.p_detect;

    let nav = Navigator::from_scenario(scenario, &cfg.nav);
    let start_raw = scenario.uav_start.position.xy();
    let (start, start_projected) = if nav.is_free(start_raw) {
        (start_raw, false)
    } else {
        nav.project_out(start_raw)
    };
    let mut flyer = Flyer::new(
        start,
        scenario.uav_start.yaw,
        cfg.nav.altitude,
        cfg.nav.speed,
        sensor.frame_period,
        budget,
    );

    let mut states: Vec<CoverageState> = scenario
        .aois
        .iter()
        .map(|a| CoverageState::new(&a.id, &a.boundary, cfg.grid_resolution, &nav, start))
        .collect();
    let anchors: Vec<Option<Point2>> = states
        .iter()
        .zip(&scenario.aois)
        .map(|(s, a)| anchor(s, &a.boundary))
        .collect();
    let full: Vec<f64> = scenario
        .aois
        .iter()
        .map(|a| full_coverage_time(a.boundary.area(), cfg.nav.speed, cfg.grid_resolution))
        .collect();
    let n = scenario.aois.len();
    let mut pair = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if let (Some(a), Some(b)) = (anchors[i], anchors[j]) {
                let d = nav.distance(a, b).unwrap_or(f64::INFINITY) / cfg.nav.speed;
                pair[i][j] = d;
                pair[j][i] = d;
            }
        }
    }

    let header = Header {
        version: TRACE_VERSION,
        scenario: name.to_string(),
        cell: cfg.cell(),
        seed,
        time_budget: budget,
        frame_period: sensor.frame_period,
        start: [start.x, start.y],
        start_projected,
        eois: (0..scenario.eois.len())
            .map(|e| TruthRecord {
                eoi_id: scenario.eois[e].id.clone(),
                position: scenario
                    .eoi_entity(e)
                    .map_or([f64::NAN; 3], |g| g.position.to_array()),
            })
            .collect(),
        config: cfg.clone(),
        sensor: sensor.clone(),
    };

    let mut sensor_rng = SimRng::seed_from_u64(seed);
    sensor_rng.set_stream(1);
    let mut plan_rng = SimRng::seed_from_u64(seed);
    plan_rng.set_stream(2);

    let mut sim = Sim {
        scenario,
        world: WorldModel::new(scenario, cfg.world.clone()),
        sensor,
        rng: sensor_rng,
        kozs: scenario.koz_polygons(),
        records: vec![TraceRecord::Header(header)],
        found_at: vec![None; scenario.eois.len()],
        violation: None,
        found_event: false,
        frames: 0,
    };
    let mut stats = WallStats::default();

    let reason = loop {
        if sim.violation.is_some() {
            break EndReason::Violation;
        }
        if sim.world.all_found() {
            break EndReason::EoisFound;
        }
        if flyer.exhausted() {
            break EndReason::BudgetExhausted;
        }
        let cand: Vec<usize> = (0..n)
            .filter(|&i| {
                anchors[i].is_some() && !states[i].is_complete() && !states[i].is_degenerate()
            })
            .collect();
        if cand.is_empty() {
            break EndReason::PlanEmpty;
        }
        let t_plan = Instant::now();
        let belief = sim.world.belief();
        let found = sim.world.found();
        let inst = SelectionInstance {
            aoi_ids: cand.iter().map(|&i| scenario.aois[i].id.clone()).collect(),
            areas: cand
                .iter()
                .map(|&i| scenario.aois[i].boundary.area())
                .collect(),
            beliefs: cand
                .iter()
                .map(|&i| {
                    (0..scenario.eois.len())
                        .map(|e| if found[e] { 0.0 } else { belief.prob(e, i) })
                        .collect()
                })
                .collect(),
            travel_from_start: cand
                .iter()
                .map(|&i| {
                    let a = anchors[i].expect("candidate has an anchor");
                    nav.distance(flyer.position, a).unwrap_or(f64::INFINITY) / cfg.nav.speed
                })
                .collect(),
            travel: cand
                .iter()
                .map(|&i| cand.iter().map(|&j| pair[i][j]).collect())
                .collect(),
            full_coverage_time: cand
                .iter()
                .map(|&i| full[i] * states[i].open.len() as f64 / states[i].initial_count as f64)
                .collect(),
            budget: (budget - flyer.time).max(0.0),
            time_quantum: cfg.time_quantum,
            p_detect: q,
            lambda,
        };
        let plan: ItineraryPlan = selection::plan(&inst, cfg.selection, &mut plan_rng)?;
        stats.planning_seconds += t_plan.elapsed().as_secs_f64();
        stats.replans += 1;
        sim.records.push(TraceRecord::Plan {
            t: flyer.time,
            legs: plan
                .legs
                .iter()
                .map(|l| LegRecord {
                    aoi: l.aoi_id.clone(),
                    allocated_time: l.allocated_time,
                    travel_time: l.travel_time,
                    expected_gain: l.expected_gain,
                })
                .collect(),
            expected_gain: plan.expected_gain,
            objective: plan.objective,
            total_time: plan.total_time,
            infeasible: plan.infeasible,
        });
        let Some(leg) = plan.legs.first() else {
            break EndReason::PlanEmpty;
        };
        let ai = scenario
            .aois
            .iter()
            .position(|a| a.id == leg.aoi_id)
            .expect("plan leg names a scenario AOI");
        let before = states[ai].coverage_fraction();
        sim.found_event = false;
        let allocation = leg.allocated_time;
        let out = if cfg.replan_on_found {
            run_until_found(
                &mut states[ai],
                cfg.coverage,
                allocation,
                &mut flyer,
                &nav,
                &mut sim,
            )
        } else {
            run_coverage(
                &mut states[ai],
                cfg.coverage,
                allocation,
                &mut flyer,
                &nav,
                &mut sim,
            )
        };
        let after = out.coverage_fraction;
        let c_eff = if after > before && before * q < 1.0 {
            ((after - before) / (1.0 - before * q)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        if c_eff > 0.0 {
            for e in 0..scenario.eois.len() {
                if !sim.world.found()[e] {
                    sim.world
                        .belief_mut()
                        .apply_negative_search(e, ai, c_eff, q);
                }
            }
        }
        sim.records.push(TraceRecord::Coverage {
            t: flyer.time,
            aoi: leg.aoi_id.clone(),
            end: out.end.name().to_string(),
            allocation,
            transit_time: out.transit_time,
            time_used: out.time_used,
            fraction_before: before,
            fraction: after,
            c_eff,
        });
    };

    if let Some(msg) = sim.violation.clone() {
        sim.records.push(TraceRecord::Violation {
            t: flyer.time,
            message: msg,
        });
    }
    let t_end = flyer.time;
    let offline = sim.world.offline_report(t_end);
    let found = scenario
        .eois
        .iter()
        .zip(&sim.found_at)
        .map(|(e, t)| FoundRecord {
            eoi_id: e.id.clone(),
            found: t.is_some(),
            t: *t,
        })
        .collect();
    sim.records.push(TraceRecord::Outcome {
        t_end,
        reason,
        frames: flyer.frames(),
        found,
        offline,
    });

    stats.wall_seconds = wall.elapsed().as_secs_f64();
    Ok(MissionTrace {
        records: sim.records,
        stats,
    })
}

/// Coverage that hands control back to the planner as soon as a new EOI is confirmed.
fn run_until_found(
    state: &mut CoverageState,
    mode: CoverageMode,
    allocation: f64,
    flyer: &mut Flyer,
    nav: &Navigator,
    sim: &mut Sim<'_>,
) -> crate::coverage::CoverageOutcome {
    struct Stopper<'s, 'a>(&'s mut Sim<'a>);
    impl MissionHooks for Stopper<'_, '_> {
        fn on_frame(&mut self, pose: &Pose) -> bool {
            let all = self.0.on_frame(pose);
            all || self.0.found_event
        }
        fn on_path(&mut self, path: &Path, purpose: &str) {
            self.0.on_path(path, purpose)
        }
    }
    let out = run_coverage(state, mode, allocation, flyer, nav, &mut Stopper(sim));
    if !sim.stop() {
        flyer.clear_stop();
    }
    out
}

/// Loads the scenario at `path` and runs one mission on it.
pub fn run_mission_file(path: &FsPath, cfg: &MissionConfig) -> Result<MissionTrace> {
    let s = load_scenario(path)?;
    run_mission(&s, cfg, &scenario_name(path))
}

pub fn scenario_name(path: &FsPath) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    File(PathBuf),
    Generated { seed: u64, config: GeneratorConfig },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchJob {
    pub name: String,
    pub source: ScenarioSource,
    pub config: MissionConfig,
}

impl BatchJob {
    pub fn run(&self) -> Result<MissionTrace> {
        let s = match &self.source {
            ScenarioSource::File(p) => load_scenario(p)?,
            ScenarioSource::Generated { seed, config } => generate_scenario(*seed, config)?,
        };
        run_mission(&s, &self.config, &self.name)
    }
}

/// `count` generated scenarios (seeds `seed_base + i`) crossed with `configs`;
/// scenario-major order.
pub fn seed_sweep(
    seed_base: u64,
    count: usize,
    gen: &GeneratorConfig,
    configs: &[MissionConfig],
) -> Vec<BatchJob> {
    let mut jobs = Vec::new();
    for i in 0..count {
        let seed = seed_base + i as u64;
        for c in configs {
            let mut config = c.clone();
            config.seed = Some(seed);
            jobs.push(BatchJob {
                name: format!("gen-{seed}"),
                source: ScenarioSource::Generated {
                    seed,
                    config: gen.clone(),
                },
                config,
            });
        }
    }
    jobs
}

/// Worker cap from `NEUSIS_SIM_THREADS`, if set to a positive integer.
pub fn env_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Runs every job, in parallel across jobs; results come back in input order
/// and a failing job does not stop the rest.
pub fn run_batch(jobs: &[BatchJob], threads: Option<usize>) -> Result<Vec<Result<MissionTrace>>> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    let pool = b
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(BatchJob::run).collect()))
}
