//! In-AOI coverage: a rasterized AOI is swept either by nearest-point
//! selection (SNaC) or by a fixed lawnmower order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flight::{FlightStop, Flyer, MissionHooks};
use crate::geometry::{Point2, Polygon2};
use crate::navigation::{Navigator, Path};

/// Euclidean-nearest candidates that get an exact path-length check.
pub const CANDIDATES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageMode {
    #[default]
    Snac,
    Boustrophedon,
}

impl CoverageMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "snac" => Ok(Self::Snac),
            "boustrophedon" => Ok(Self::Boustrophedon),
            _ => Err(Error::Config(format!(
                "unknown coverage mode `{s}` (snac|boustrophedon)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Snac => "snac",
            Self::Boustrophedon => "boustrophedon",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageEnd {
    Completed,
    TimeExpired,
    EoisFound,
}

impl CoverageEnd {
    pub fn name(self) -> &'static str {
        match self {
            Self::Completed => "completed",
            Self::TimeExpired => "time_expired",
            Self::EoisFound => "eois_found",
        }
    }
}

impl fmt::Display for CoverageEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid points of `aoi` at spacing `res`, anchored at the bounding-box corner,
/// that lie in the AOI, outside every obstacle and are reachable from `from`.
/// Sorted lexicographically.
pub fn rasterize_aoi(aoi: &Polygon2, res: f64, nav: &Navigator, from: Point2) -> Vec<Point2> {
    let bb = aoi.bbox();
    let nx = (bb.width() / res + 1e-9).floor() as usize;
    let ny = (bb.height() / res + 1e-9).floor() as usize;
    let mut pts = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            let p = Point2::new(bb.min.x + i as f64 * res, bb.min.y + j as f64 * res);
            if aoi.contains(p) && nav.is_free(p) && nav.reachable(from, p) {
                pts.push(p);
            }
        }
    }
    pts.sort_by(Point2::lex_cmp);
    pts
}

/// Per-AOI coverage progress; survives across revisits.
#[derive(Debug, Clone)]
pub struct CoverageState {
    pub aoi_id: String,
    pub grid_resolution: f64,
    pub footprint_radius: f64,
    pub open: Vec<Point2>,
    pub visited: Vec<Point2>,
    pub initial_count: usize,
    /// Time spent inside the allocation so far, excluding the entry transit.
    pub elapsed: f64,
    /// Lawnmower lane endpoints, pairwise: start, end, start, end, ...
    lanes: Vec<Point2>,
    lane_cursor: usize,
    /// Raster points in lane order, for the clean-up pass after the lanes.
    lane_points: Vec<Point2>,
}

impl CoverageState {
    pub fn new(aoi_id: &str, aoi: &Polygon2, res: f64, nav: &Navigator, from: Point2) -> Self {
        let open = rasterize_aoi(aoi, res, nav, from);
        let lane_points = lane_order(&open);
        let lanes = lane_endpoints(aoi, &lane_points, nav);
        Self {
            aoi_id: aoi_id.to_string(),
            grid_resolution: res,
            footprint_radius: res / std::f64::consts::SQRT_2,
            initial_count: open.len(),
            open,
            visited: Vec::new(),
            elapsed: 0.0,
            lanes,
            lane_cursor: 0,
            lane_points,
        }
    }

    /// True when rasterization produced no reachable point.
    pub fn is_degenerate(&self) -> bool {
        self.initial_count == 0
    }

    pub fn is_complete(&self) -> bool {
        self.open.is_empty()
    }

    pub fn coverage_fraction(&self) -> f64 {
        if self.initial_count == 0 {
            1.0
        } else {
            self.visited.len() as f64 / self.initial_count as f64
        }
    }

    /// Moves every open point within the footprint of `at` to visited.
    pub fn mark(&mut self, at: Point2) {
        let r = self.footprint_radius;
        let mut i = 0;
        while i < self.open.len() {
            if self.open[i].dist(at) <= r {
                self.visited.push(self.open.remove(i));
            } else {
                i += 1;
            }
        }
    }

    fn mark_point(&mut self, p: Point2) {
        if let Some(i) = self.open.iter().position(|&q| q == p) {
            self.visited.push(self.open.remove(i));
        }
    }

    fn drop_point(&mut self, p: Point2) {
        self.open.retain(|&q| q != p);
    }

    fn row_open(&self, y: f64) -> bool {
        self.open.iter().any(|p| (p.y - y).abs() < 1e-9)
    }

    /// Next coverage target from `from`, or None when nothing open is reachable.
    pub fn next_target(&self, mode: CoverageMode, from: Point2, nav: &Navigator) -> Option<Target> {
        match mode {
            CoverageMode::Snac => snac_target(&self.open, from, nav),
            CoverageMode::Boustrophedon => {
                let mut k = self.lane_cursor;
                while k < self.lanes.len() {
                    let wp = self.lanes[k];
                    if !self.row_open(wp.y) {
                        // lane already swept; jump to the next lane's start
                        k = (k | 1) + 1;
                        continue;
                    }
                    if let Some(path) = nav.shortest_path(from, wp) {
                        return Some(Target {
                            point: wp,
                            path,
                            lane_index: Some(k),
                        });
                    }
                    k += 1;
                }
                self.lane_points
                    .iter()
                    .filter(|p| self.open.contains(p))
                    .find_map(|&p| {
                        nav.shortest_path(from, p).map(|path| Target {
                            point: p,
                            path,
                            lane_index: None,
                        })
                    })
            }
        }
    }
}

/// Where to fly next: a raster point, or a lawnmower lane endpoint.
#[derive(Debug, Clone)]
pub struct Target {
    pub point: Point2,
    pub path: Path,
    /// Index into the lane endpoint list when the target is a lane endpoint.
    pub lane_index: Option<usize>,
}

/// Rows bottom to top, alternating direction, starting at the lower-left point.
fn lane_order(points: &[Point2]) -> Vec<Point2> {
    rows(points)
        .into_iter()
        .enumerate()
        .flat_map(|(i, mut r)| {
            if i % 2 == 1 {
                r.reverse();
            }
            r
        })
        .collect()
}

fn rows(points: &[Point2]) -> Vec<Vec<Point2>> {
    let mut rows: Vec<Vec<Point2>> = Vec::new();
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
    for p in sorted {
        match rows.last_mut() {
            Some(r) if (r[0].y - p.y).abs() < 1e-9 => r.push(p),
            _ => rows.push(vec![p]),
        }
    }
    rows
}

/// Extent of the horizontal line at `y` inside the closed polygon.
fn span_at(poly: &Polygon2, y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (a, b) in poly.edges() {
        if a.y == b.y {
            if a.y == y {
                lo = lo.min(a.x.min(b.x));
                hi = hi.max(a.x.max(b.x));
            }
        } else if a.y.min(b.y) <= y && y <= a.y.max(b.y) {
            let x = a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x);
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// One lane per raster row, boundary to boundary, alternating direction. An
/// endpoint inside an obstacle falls back to the row's outermost raster point.
fn lane_endpoints(aoi: &Polygon2, lane_points: &[Point2], nav: &Navigator) -> Vec<Point2> {
    let mut out = Vec::new();
    for (i, row) in rows(lane_points).into_iter().enumerate() {
        let y = row[0].y;
        let (first, last) = (row[0], row[row.len() - 1]);
        let (mut a, mut b) = match span_at(aoi, y) {
            Some((lo, hi)) => (
                Point2::new(lo.min(first.x), y),
                Point2::new(hi.max(last.x), y),
            ),
            None => (first, last),
        };
        if !nav.is_free(a) {
            a = first;
        }
        if !nav.is_free(b) {
            b = last;
        }
        if i % 2 == 1 {
            std::mem::swap(&mut a, &mut b);
        }
        out.push(a);
        out.push(b);
    }
    out
}

fn snac_target(open: &[Point2], from: Point2, nav: &Navigator) -> Option<Target> {
    let mut by_euclid: Vec<Point2> = open.to_vec();
    by_euclid.sort_by(|a, b| a.dist(from).total_cmp(&b.dist(from)).then(a.lex_cmp(b)));
    // Top candidates first; widen only if none of them has a path.
    for chunk in by_euclid.chunks(CANDIDATES) {
        let best = chunk
            .iter()
            .filter_map(|&p| {
                nav.shortest_path(from, p).map(|path| Target {
                    point: p,
                    path,
                    lane_index: None,
                })
            })
            .min_by(|a, b| {
                a.path
                    .length
                    .total_cmp(&b.path.length)
                    .then(a.point.lex_cmp(&b.point))
            });
        if best.is_some() {
            return best;
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageOutcome {
    pub end: CoverageEnd,
    /// Fraction of the initial raster visited, cumulative over visits.
    pub coverage_fraction: f64,
    /// Time spent flying to the first target (not charged to the allocation).
    pub transit_time: f64,
    /// Allocation time used in this call.
    pub time_used: f64,
    pub budget_exhausted: bool,
}

/// Covers the AOI until the raster is done, `allocation` seconds have passed
/// after reaching the first target, the budget runs out, or every EOI is found.
pub fn run_coverage(
    state: &mut CoverageState,
    mode: CoverageMode,
    allocation: f64,
    flyer: &mut Flyer,
    nav: &Navigator,
    hooks: &mut dyn MissionHooks,
) -> CoverageOutcome {
    let mut outcome = CoverageOutcome {
        end: CoverageEnd::Completed,
        coverage_fraction: state.coverage_fraction(),
        transit_time: 0.0,
        time_used: 0.0,
        budget_exhausted: false,
    };
    let t_enter = flyer.time;
    let mut deadline = f64::INFINITY;
    let mut started: Option<f64> = None;
    loop {
        if flyer.all_found() {
            outcome.end = CoverageEnd::EoisFound;
            break;
        }
        if flyer.exhausted() {
            outcome.end = CoverageEnd::TimeExpired;
            outcome.budget_exhausted = true;
            break;
        }
        if started.is_some() && flyer.time >= deadline - 1e-9 {
            outcome.end = CoverageEnd::TimeExpired;
            break;
        }
        let Some(Target {
            point: target,
            path,
            lane_index,
        }) = state.next_target(mode, flyer.position, nav)
        else {
            for p in state.open.clone() {
                state.drop_point(p);
            }
            outcome.end = CoverageEnd::Completed;
            break;
        };
        hooks.on_path(
            &path,
            if started.is_none() {
                "entry"
            } else {
                "coverage"
            },
        );
        let stop = flyer.fly(&path, deadline, hooks, &mut |at| state.mark(at));
        match stop {
            FlightStop::Arrived => {
                match lane_index {
                    Some(k) => state.lane_cursor = k + 1,
                    None => state.mark_point(target),
                }
                if started.is_none() {
                    let now = flyer.time;
                    started = Some(now);
                    outcome.transit_time = now - t_enter;
                    deadline = now + allocation;
                }
                if state.is_complete() {
                    // The arrival pose only enters the trace at the next frame.
                    if !flyer.close_frame(hooks, &mut |at| state.mark(at)) {
                        if lane_index.is_none() {
                            state.open.push(target);
                            state.visited.retain(|&q| q != target);
                        }
                        outcome.end = CoverageEnd::TimeExpired;
                        outcome.budget_exhausted = true;
                    } else if flyer.all_found() {
                        outcome.end = CoverageEnd::EoisFound;
                    }
                    break;
                }
            }
            FlightStop::Deadline => {
                outcome.end = CoverageEnd::TimeExpired;
                break;
            }
            FlightStop::Budget => {
                outcome.end = CoverageEnd::TimeExpired;
                outcome.budget_exhausted = true;
                break;
            }
            FlightStop::AllFound => {
                outcome.end = CoverageEnd::EoisFound;
                break;
            }
        }
    }
    if started.is_none() {
        outcome.transit_time = flyer.time - t_enter;
    }
    if let Some(s) = started {
        outcome.time_used = flyer.time - s;
        state.elapsed += outcome.time_used;
    }
    outcome.coverage_fraction = state.coverage_fraction();
    outcome
}
