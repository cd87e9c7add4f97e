//! Probabilistic world model: physical filtering, track association, evidence
//! accumulation and EOI reporting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Polygon2, Rect};
use crate::mission::{BeliefMap, EoiDescriptor, OccupancyGrid, Scenario};
use crate::sensor::{Detection, N_COLORS, N_TYPES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Accumulation {
    /// Tracks carry only their latest detection.
    Off,
    /// Arithmetic mean of positions; attributes from the latest detection.
    Naive,
    /// Gaussian position filter and Bayesian attribute reweighting.
    Bayes,
}

impl Accumulation {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Self::Off),
            "naive" => Ok(Self::Naive),
            "bayes" => Ok(Self::Bayes),
            other => Err(Error::Config(format!(
                "unknown accumulation mode '{other}' (off|naive|bayes)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Off => "off",
            Self::Naive => "naive",
            Self::Bayes => "bayes",
        }
    }
}

/// How the AOI belief enters the match confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LocationFactor {
    /// The belief of the containing AOI (residual outside every AOI).
    Raw,
    /// Probability the EOI is in the containing AOI given that a matching object
    /// was seen there, when non-EOI matches appear in an AOI at `distractor_rate`:
    /// `b / (b + (1 - b) d)`. Outside every AOI the residual is used as is.
    Sighting { distractor_rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub accumulation: Accumulation,
    pub report_threshold: f64,
    pub gate_radius: f64,
    /// Largest plausible height of a detection above the local ground surface.
    pub max_height_above_ground: f64,
    pub location_factor: LocationFactor,
    /// A track's position must move this far before it is re-reported.
    pub rereport_distance: f64,
    pub prune_after: f64,
    pub prune_confidence: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            accumulation: Accumulation::Bayes,
            report_threshold: 0.85,
            gate_radius: 4.0,
            max_height_above_ground: 2.5,
            location_factor: LocationFactor::Sighting {
                distractor_rate: 0.0,
            },
            rereport_distance: 1.0,
            prune_after: 30.0,
            prune_confidence: 0.1,
        }
    }
}

impl WorldConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.report_threshold > 0.0 && self.report_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "report threshold {} outside (0, 1]",
                self.report_threshold
            )));
        }
        if !(self.gate_radius >= 0.0 && self.max_height_above_ground >= 0.0) {
            return Err(Error::Config(
                "gate radius and height limit must be nonnegative".into(),
            ));
        }
        if let LocationFactor::Sighting { distractor_rate } = self.location_factor {
            if !(0.0..=1.0).contains(&distractor_rate) {
                return Err(Error::Config("distractor rate outside [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub track_id: u64,
    pub position_mean: Point3,
    /// Isotropic per-axis variance, m².
    pub position_variance: f64,
    pub color_posterior: [f64; N_COLORS],
    pub type_posterior: [f64; N_TYPES],
    pub n_observations: u32,
    pub last_seen: f64,
    pub best_single_confidence: f64,
    /// Running sum of squared measurements, for the naive sample variance.
    #[serde(skip)]
    sum_sq: f64,
}

impl Track {
    /// Track seeded from a first measurement.
    pub fn new(
        track_id: u64,
        z: Point3,
        sigma_z: f64,
        color: [f64; N_COLORS],
        vtype: [f64; N_TYPES],
        t: f64,
    ) -> Self {
        let zz = z.to_array();
        Self {
            track_id,
            position_mean: z,
            position_variance: sigma_z * sigma_z,
            color_posterior: color,
            type_posterior: vtype,
            n_observations: 1,
            last_seen: t,
            best_single_confidence: 0.0,
            sum_sq: zz.iter().map(|x| x * x).sum(),
        }
    }

    fn from_detection(track_id: u64, d: &Detection, t: f64) -> Self {
        let mut tr = Self::new(
            track_id,
            d.measured_position,
            d.position_sigma,
            d.color_likelihood,
            d.type_likelihood,
            t,
        );
        tr.best_single_confidence = d.confidence;
        tr
    }
}

/// Per-axis static-state Gaussian update.
pub fn update_position_bayes(t: &mut Track, z: Point3, sigma_z: f64) {
    let vt = t.position_variance;
    let vz = sigma_z * sigma_z;
    let m = t.position_mean.to_array();
    let zz = z.to_array();
    let s = vt + vz;
    let mean = std::array::from_fn(|i| {
        if s > 0.0 {
            (vz * m[i] + vt * zz[i]) / s
        } else {
            m[i]
        }
    });
    t.position_mean = Point3::from_array(mean);
    t.position_variance = if s > 0.0 { vt * vz / s } else { 0.0 };
    t.n_observations += 1;
}

/// Running arithmetic mean; the variance field becomes the sample variance
/// (averaged over axes).
pub fn update_position_naive(t: &mut Track, z: Point3) {
    let n = t.n_observations as f64;
    let m = t.position_mean.to_array();
    let zz = z.to_array();
    let mean: [f64; 3] = std::array::from_fn(|i| m[i] + (zz[i] - m[i]) / (n + 1.0));
    t.sum_sq += zz.iter().map(|x| x * x).sum::<f64>();
    t.n_observations += 1;
    let k = t.n_observations as f64;
    let sq_mean: f64 = mean.iter().map(|x| x * x).sum();
    t.position_variance = ((t.sum_sq / k - sq_mean) / 3.0).max(0.0);
    t.position_mean = Point3::from_array(mean);
}

fn bayes_product<const N: usize>(post: &mut [f64; N], lik: &[f64; N]) {
    let mut prod = [0.0; N];
    for i in 0..N {
        prod[i] = post[i] * lik[i];
    }
    let s: f64 = prod.iter().sum();
    if s > 0.0 && s.is_finite() {
        for i in 0..N {
            post[i] = prod[i] / s;
        }
    } else {
        *post = *lik;
    }
}

/// Pointwise Bayes reweighting of the attribute posteriors. A zero product
/// resets the posterior to the likelihood.
pub fn update_attributes(t: &mut Track, color_lik: &[f64; N_COLORS], type_lik: &[f64; N_TYPES]) {
    bayes_product(&mut t.color_posterior, color_lik);
    bayes_product(&mut t.type_posterior, type_lik);
}

/// Drops detections outside the map, inside occupied voxels, or implausibly
/// high above the ground surface. Order is preserved.
pub fn filter_physical(
    dets: &[Detection],
    occ: &OccupancyGrid,
    extent: Rect,
    max_height: f64,
) -> Vec<Detection> {
    dets.iter()
        .filter(|d| {
            let p = d.measured_position;
            extent.contains(p.xy())
                && !occ.occupied_at(p)
                && p.z - occ.ground_height(p.xy()) <= max_height
        })
        .cloned()
        .collect()
}

/// Greedy nearest-neighbour assignment inside the gate: pairs are taken in
/// order of (distance, track id, detection index). Returns, per detection, the
/// index into `tracks` it joins, or `None` for a new track.
pub fn associate(dets: &[Detection], tracks: &[Track], gate: f64) -> Vec<Option<usize>> {
    let mut pairs = Vec::new();
    for (di, d) in dets.iter().enumerate() {
        for (ti, t) in tracks.iter().enumerate() {
            let dist = d.measured_position.dist(t.position_mean);
            if dist <= gate {
                pairs.push((dist, t.track_id, di, ti));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; dets.len()];
    let mut taken = vec![false; tracks.len()];
    for (_, _, di, ti) in pairs {
        if out[di].is_none() && !taken[ti] {
            out[di] = Some(ti);
            taken[ti] = true;
        }
    }
    out
}

/// Index of the first AOI containing the track's ground projection.
fn containing_aoi(aois: &[Polygon2], p: Point3) -> Option<usize> {
    aois.iter().position(|a| a.contains(p.xy()))
}

pub fn location_factor(
    belief: &BeliefMap,
    eoi: usize,
    aoi: Option<usize>,
    mode: LocationFactor,
) -> f64 {
    let b = belief.location_prob(eoi, aoi);
    match (mode, aoi) {
        (LocationFactor::Raw, _) | (_, None) => b,
        (LocationFactor::Sighting { distractor_rate }, Some(_)) => {
            let den = b + (1.0 - b) * distractor_rate;
            if den > 0.0 {
                b / den
            } else {
                0.0
            }
        }
    }
}

/// color × type × location factor for one track and EOI (`eoi` indexes the belief map).
pub fn match_confidence(
    t: &Track,
    e: &EoiDescriptor,
    eoi: usize,
    belief: &BeliefMap,
    aois: &[Polygon2],
    mode: LocationFactor,
) -> f64 {
    let loc = location_factor(belief, eoi, containing_aoi(aois, t.position_mean), mode);
    t.color_posterior[e.color.index()] * t.type_posterior[e.vehicle_type.index()] * loc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportMode {
    Online,
    Offline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EoiReport {
    pub eoi_id: String,
    pub reported_position: Point3,
    pub confidence: f64,
    pub timestamp: f64,
    pub mode: ReportMode,
    pub track_id: u64,
}

/// Per-frame bookkeeping returned to the mission loop.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameUpdate {
    pub received: usize,
    pub filtered: usize,
    pub new_tracks: usize,
    pub pruned: usize,
    pub reports: Vec<EoiReport>,
    /// EOI ids confirmed for the first time this frame.
    pub newly_found: Vec<String>,
}

/// The mutable store owned by the mission loop.
#[derive(Debug, Clone)]
pub struct WorldModel {
    cfg: WorldConfig,
    eois: Vec<EoiDescriptor>,
    aois: Vec<Polygon2>,
    extent: Rect,
    belief: BeliefMap,
    tracks: Vec<Track>,
    next_id: u64,
    found: Vec<bool>,
    /// (eoi index, track id) -> position at the last report.
    reported: BTreeMap<(usize, u64), Point3>,
}

impl WorldModel {
    pub fn new(s: &Scenario, cfg: WorldConfig) -> Self {
        Self {
            eois: s.eois.clone(),
            aois: s.aois.iter().map(|a| a.boundary.clone()).collect(),
            extent: s.map_extent,
            belief: s.initial_belief(),
            found: vec![false; s.eois.len()],
            cfg,
            tracks: Vec::new(),
            next_id: 0,
            reported: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn belief(&self) -> &BeliefMap {
        &self.belief
    }

    pub fn belief_mut(&mut self) -> &mut BeliefMap {
        &mut self.belief
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn found(&self) -> &[bool] {
        &self.found
    }

    pub fn all_found(&self) -> bool {
        self.found.iter().all(|&f| f)
    }

    pub fn confidence(&self, t: &Track, eoi: usize) -> f64 {
        match_confidence(
            t,
            &self.eois[eoi],
            eoi,
            &self.belief,
            &self.aois,
            self.cfg.location_factor,
        )
    }

    fn best_confidence(&self, t: &Track) -> f64 {
        (0..self.eois.len())
            .map(|e| self.confidence(t, e))
            .fold(0.0, f64::max)
    }

    fn absorb(&mut self, ti: usize, d: &Detection, now: f64) {
        let mode = self.cfg.accumulation;
        let t = &mut self.tracks[ti];
        match mode {
            Accumulation::Off => {
                let n = t.n_observations;
                let best = t.best_single_confidence;
                *t = Track::from_detection(t.track_id, d, now);
                t.n_observations = n + 1;
                t.best_single_confidence = best;
            }
            Accumulation::Naive => {
                update_position_naive(t, d.measured_position);
                // only the position is averaged; attributes come from the latest frame
                t.color_posterior = d.color_likelihood;
                t.type_posterior = d.type_likelihood;
            }
            Accumulation::Bayes => {
                update_position_bayes(t, d.measured_position, d.position_sigma);
                update_attributes(t, &d.color_likelihood, &d.type_likelihood);
            }
        }
        t.last_seen = now;
        t.best_single_confidence = t.best_single_confidence.max(d.confidence);
    }

    /// Runs one frame of detections through filtering, association, accumulation,
    /// pruning and online reporting. The first online report of an EOI collapses
    /// its belief onto the containing AOI.
    pub fn process_frame(
        &mut self,
        now: f64,
        dets: &[Detection],
        occ: &OccupancyGrid,
    ) -> FrameUpdate {
        let mut up = FrameUpdate {
            received: dets.len(),
            ..Default::default()
        };
        let kept = filter_physical(dets, occ, self.extent, self.cfg.max_height_above_ground);
        up.filtered = dets.len() - kept.len();

        let assignment = associate(&kept, &self.tracks, self.cfg.gate_radius);
        for (d, a) in kept.iter().zip(assignment) {
            match a {
                Some(ti) => self.absorb(ti, d, now),
                None => {
                    self.tracks
                        .push(Track::from_detection(self.next_id, d, now));
                    self.next_id += 1;
                    up.new_tracks += 1;
                }
            }
        }

        let before = self.tracks.len();
        let keep: Vec<bool> = self
            .tracks
            .iter()
            .map(|t| {
                !(t.n_observations == 1
                    && now - t.last_seen > self.cfg.prune_after
                    && self.best_confidence(t) < self.cfg.prune_confidence)
            })
            .collect();
        let mut it = keep.iter();
        self.tracks.retain(|_| *it.next().unwrap_or(&true));
        up.pruned = before - self.tracks.len();

        up.reports = self.online_report(now);
        for r in &up.reports {
            let e = self
                .belief
                .eoi_index(&r.eoi_id)
                .expect("report for a known EOI");
            if !self.found[e] {
                self.found[e] = true;
                let aoi = containing_aoi(&self.aois, r.reported_position);
                self.belief.collapse(e, aoi);
                up.newly_found.push(r.eoi_id.clone());
            }
        }
        up
    }

    /// At most one report per EOI: the best track at or above the threshold that
    /// has not been reported for that EOI, or has moved since its last report.
    pub fn online_report(&mut self, now: f64) -> Vec<EoiReport> {
        let mut out = Vec::new();
        for e in 0..self.eois.len() {
            let mut best: Option<(f64, usize)> = None;
            for (ti, t) in self.tracks.iter().enumerate() {
                let c = self.confidence(t, e);
                if c < self.cfg.report_threshold {
                    continue;
                }
                if let Some(prev) = self.reported.get(&(e, t.track_id)) {
                    if prev.dist(t.position_mean) <= self.cfg.rereport_distance {
                        continue;
                    }
                }
                // tracks are kept in id order, so a strict comparison keeps the lower id on ties
                if best.is_none_or(|(bc, _)| c > bc) {
                    best = Some((c, ti));
                }
            }
            if let Some((c, ti)) = best {
                let t = &self.tracks[ti];
                self.reported.insert((e, t.track_id), t.position_mean);
                out.push(EoiReport {
                    eoi_id: self.eois[e].id.clone(),
                    reported_position: t.position_mean,
                    confidence: c,
                    timestamp: now,
                    mode: ReportMode::Online,
                    track_id: t.track_id,
                });
            }
        }
        out
    }

    /// Final best candidate per EOI, without threshold. Tracks with zero
    /// confidence for an EOI are not candidates for it.
    pub fn offline_report(&self, now: f64) -> Vec<EoiReport> {
        offline_report(
            &self.tracks,
            &self.eois,
            &self.belief,
            &self.aois,
            self.cfg.location_factor,
            now,
        )
    }
}

/// Stand-alone form of [`WorldModel::offline_report`].
pub fn offline_report(
    tracks: &[Track],
    eois: &[EoiDescriptor],
    belief: &BeliefMap,
    aois: &[Polygon2],
    mode: LocationFactor,
    now: f64,
) -> Vec<EoiReport> {
    let mut out = Vec::new();
    for (e, desc) in eois.iter().enumerate() {
        let mut best: Option<(f64, &Track)> = None;
        for t in tracks {
            let c = match_confidence(t, desc, e, belief, aois, mode);
            if c > 0.0
                && best.is_none_or(|(bc, bt)| c > bc || (c == bc && t.track_id < bt.track_id))
            {
                best = Some((c, t));
            }
        }
        if let Some((c, t)) = best {
            out.push(EoiReport {
                eoi_id: desc.id.clone(),
                reported_position: t.position_mean,
                confidence: c,
                timestamp: now,
                mode: ReportMode::Offline,
                track_id: t.track_id,
            });
        }
    }
    out
}
