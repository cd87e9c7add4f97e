//! Scoring of mission traces: report matching, success rate, precision/recall/F1
//! and per-rank search times.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::runner::{MissionTrace, TruthRecord};
use crate::world::EoiReport;

pub const DEFAULT_RADIUS: f64 = 5.0;
/// Ranks reported by `search_times`.
pub const RANKS: usize = 4;
/// Placeholder for a rank no mission reached.
pub const ABSENT: &str = "–";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Matching {
    /// (report index, EOI index, distance)
    pub pairs: Vec<(usize, usize, f64)>,
    /// Extra reports within the radius of an already matched EOI.
    pub duplicates: Vec<usize>,
    pub false_positives: Vec<usize>,
    /// EOI indices left unmatched.
    pub missed: Vec<usize>,
}

impl Matching {
    /// Reports that landed within the radius of the EOI they name.
    pub fn correct_reports(&self) -> usize {
        self.pairs.len() + self.duplicates.len()
    }
}

fn truth_point(t: &TruthRecord) -> Point3 {
    Point3::from_array(t.position)
}

/// Per EOI, the closest report naming it within `radius` is the match; other
/// in-radius reports for it are duplicates, the rest are false positives.
pub fn match_reports(reports: &[EoiReport], truth: &[TruthRecord], radius: f64) -> Matching {
    let mut m = Matching::default();
    for (ri, r) in reports.iter().enumerate() {
        if !truth.iter().any(|t| t.eoi_id == r.eoi_id) {
            m.false_positives.push(ri);
        }
    }
    for (ei, t) in truth.iter().enumerate() {
        let gt = truth_point(t);
        let mut claims: Vec<(f64, usize)> = reports
            .iter()
            .enumerate()
            .filter(|(_, r)| r.eoi_id == t.eoi_id)
            .map(|(ri, r)| (r.reported_position.dist(gt), ri))
            .collect();
        claims.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut matched = false;
        for (d, ri) in claims {
            if d <= radius {
                if matched {
                    m.duplicates.push(ri);
                } else {
                    m.pairs.push((ri, ei, d));
                    matched = true;
                }
            } else {
                m.false_positives.push(ri);
            }
        }
        if !matched {
            m.missed.push(ei);
        }
    }
    m.pairs.sort_by_key(|p| p.0);
    m.duplicates.sort_unstable();
    m.false_positives.sort_unstable();
    m
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No reports at all; precision is reported as 0.
    pub precision_undefined: bool,
    pub reports: usize,
    pub correct_reports: usize,
    pub matched_eois: usize,
    pub total_eois: usize,
    pub false_positives: usize,
    pub duplicates: usize,
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Prf {
    fn from_counts(
        reports: usize,
        correct: usize,
        matched: usize,
        total: usize,
        fp: usize,
        dup: usize,
    ) -> Self {
        let precision = if reports == 0 {
            0.0
        } else {
            correct as f64 / reports as f64
        };
        let recall = if total == 0 {
            0.0
        } else {
            matched as f64 / total as f64
        };
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
            precision_undefined: reports == 0,
            reports,
            correct_reports: correct,
            matched_eois: matched,
            total_eois: total,
            false_positives: fp,
            duplicates: dup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    Online,
    Offline,
}

fn reports_of(t: &MissionTrace, mode: ScoreMode) -> Vec<EoiReport> {
    match mode {
        ScoreMode::Online => t.online_reports().cloned().collect(),
        ScoreMode::Offline => t.offline_reports().to_vec(),
    }
}

fn truth_of(t: &MissionTrace) -> &[TruthRecord] {
    t.header().map_or(&[], |h| h.eois.as_slice())
}

/// Pooled precision/recall/F1. Online scores every report emitted in flight;
/// offline only the end-of-mission per-EOI reports.
pub fn prf(traces: &[MissionTrace], mode: ScoreMode, radius: f64) -> Prf {
    let (mut reports, mut correct, mut matched, mut total, mut fp, mut dup) = (0, 0, 0, 0, 0, 0);
    for t in traces {
        let rs = reports_of(t, mode);
        let truth = truth_of(t);
        let m = match_reports(&rs, truth, radius);
        reports += rs.len();
        correct += m.correct_reports();
        matched += m.pairs.len();
        total += truth.len();
        fp += m.false_positives.len();
        dup += m.duplicates.len();
    }
    Prf::from_counts(reports, correct, matched, total, fp, dup)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    /// Matched EOIs over all EOIs in the batch.
    pub micro: f64,
    /// Mean of per-mission rates.
    pub macro_: f64,
    pub matched: usize,
    pub total: usize,
}

/// An EOI counts as a success once some online report places it within `radius`.
pub fn success_rate(traces: &[MissionTrace], radius: f64) -> SuccessRate {
    let mut out = SuccessRate::default();
    let mut per_mission = Vec::new();
    for t in traces {
        let truth = truth_of(t);
        let rs = reports_of(t, ScoreMode::Online);
        let m = match_reports(&rs, truth, radius).pairs.len();
        out.matched += m;
        out.total += truth.len();
        if !truth.is_empty() {
            per_mission.push(m as f64 / truth.len() as f64);
        }
    }
    out.micro = if out.total == 0 {
        0.0
    } else {
        out.matched as f64 / out.total as f64
    };
    out.macro_ = if per_mission.is_empty() {
        0.0
    } else {
        per_mission.iter().sum::<f64>() / per_mission.len() as f64
    };
    out
}

/// Timestamps of the first in-radius online report of each EOI, ascending.
pub fn first_correct_times(t: &MissionTrace, radius: f64) -> Vec<f64> {
    let truth = truth_of(t);
    let mut times: Vec<f64> = truth
        .iter()
        .filter_map(|e| {
            let gt = truth_point(e);
            t.online_reports()
                .filter(|r| r.eoi_id == e.eoi_id && r.reported_position.dist(gt) <= radius)
                .map(|r| r.timestamp)
                .min_by(f64::total_cmp)
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times
}

/// Mean k-th search time over the missions that reached rank k.
pub fn search_times(traces: &[MissionTrace], radius: f64) -> [Option<f64>; RANKS] {
    let mut sums = [0.0; RANKS];
    let mut counts = [0usize; RANKS];
    for t in traces {
        for (k, ts) in first_correct_times(t, radius)
            .into_iter()
            .take(RANKS)
            .enumerate()
        {
            sums[k] += ts;
            counts[k] += 1;
        }
    }
    std::array::from_fn(|k| (counts[k] > 0).then(|| sums[k] / counts[k] as f64))
}

/// Mean 3D error of matched offline reports, if any matched.
pub fn localization_error(traces: &[MissionTrace], radius: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in traces {
        let rs = reports_of(t, ScoreMode::Offline);
        for (_, _, d) in match_reports(&rs, truth_of(t), radius).pairs {
            sum += d;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub cell: String,
    pub missions: usize,
    pub radius: f64,
    pub success_rate: SuccessRate,
    pub online: Prf,
    pub offline: Prf,
    pub search_times: [Option<f64>; RANKS],
    pub localization_error: Option<f64>,
}

pub fn summarize(cell: &str, traces: &[MissionTrace], radius: f64) -> MetricsSummary {
    MetricsSummary {
        cell: cell.to_string(),
        missions: traces.len(),
        radius,
        success_rate: success_rate(traces, radius),
        online: prf(traces, ScoreMode::Online, radius),
        offline: prf(traces, ScoreMode::Offline, radius),
        search_times: search_times(traces, radius),
        localization_error: localization_error(traces, radius),
    }
}

/// Groups traces by their header cell, keeping first-appearance order.
pub fn group_by_cell(traces: Vec<MissionTrace>) -> Vec<(String, Vec<MissionTrace>)> {
    let mut groups: Vec<(String, Vec<MissionTrace>)> = Vec::new();
    for t in traces {
        let cell = t.header().map(|h| h.cell.clone()).unwrap_or_default();
        match groups.iter_mut().find(|(c, _)| *c == cell) {
            Some((_, v)) => v.push(t),
            None => groups.push((cell, vec![t])),
        }
    }
    groups
}

/// Every `*.jsonl` trace under `dir`, recursively, in path order.
pub fn trace_files(dir: &Path) -> Result<Vec<PathBuf>> {
    fn walk(d: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let rd = std::fs::read_dir(d).map_err(|e| Error::io(d, e))?;
        for entry in rd {
            let p = entry.map_err(|e| Error::io(d, e))?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|x| x == "jsonl") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, &mut out)?;
    out.sort();
    Ok(out)
}

pub fn load_traces(dir: &Path) -> Result<Vec<MissionTrace>> {
    trace_files(dir)?
        .iter()
        .map(|p| MissionTrace::read(p))
        .collect()
}

fn opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| ABSENT.to_string(), |v| format!("{v:.digits$}"))
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

pub const CSV_HEADER: &str = "row,cell,missions,radius_m,sr,sr_macro,matched,total_eois,\
offline_f1,offline_precision,offline_recall,online_f1,online_precision,online_recall,\
online_precision_undefined,online_reports,online_false_positives,loc_error_m,t1,t2,t3,t4";

/// One CSV row per (row label, summary).
pub fn to_csv(rows: &[(String, MetricsSummary)]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (label, s) in rows {
        let t = &s.search_times;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.4},{:.4},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{},{},{},{},{},{}",
            csv_field(label),
            csv_field(&s.cell),
            s.missions,
            s.radius,
            s.success_rate.micro,
            s.success_rate.macro_,
            s.success_rate.matched,
            s.success_rate.total,
            s.offline.f1,
            s.offline.precision,
            s.offline.recall,
            s.online.f1,
            s.online.precision,
            s.online.recall,
            s.online.precision_undefined,
            s.online.reports,
            s.online.false_positives,
            opt(s.localization_error, 3),
            opt(t[0], 2),
            opt(t[1], 2),
            opt(t[2], 2),
            opt(t[3], 2),
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Markdown table with the column layout of the comparison tables: F1
/// (offline, online), success rate, and four search-time ranks. Percentages.
pub fn to_markdown(rows: &[(String, MetricsSummary)]) -> String {
    let mut out = String::new();
    out.push_str("| Configuration | F1 offline | F1 online | P online | R online | SR | SR (macro) | Loc. err (m) | 1st | 2nd | 3rd | 4th |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for (label, s) in rows {
        let t = &s.search_times;
        let p_on = if s.online.precision_undefined {
            format!("{} (undef.)", pct(0.0))
        } else {
            pct(s.online.precision)
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            label,
            pct(s.offline.f1),
            pct(s.online.f1),
            p_on,
            pct(s.online.recall),
            pct(s.success_rate.micro),
            pct(s.success_rate.macro_),
            opt(s.localization_error, 2),
            opt(t[0], 2),
            opt(t[1], 2),
            opt(t[2], 2),
            opt(t[3], 2),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{
        EndReason, FoundRecord, FrameRecord, Header, MissionConfig, TraceRecord, WallStats,
    };
    use crate::sensor::SensorModel;
    use crate::world::ReportMode;
    use proptest::prelude::*;

    fn truth(id: &str, x: f64) -> TruthRecord {
        TruthRecord {
            eoi_id: id.into(),
            position: [x, 0.0, 0.0],
        }
    }

    fn report(id: &str, x: f64, t: f64) -> EoiReport {
        EoiReport {
            eoi_id: id.into(),
            reported_position: Point3::new(x, 0.0, 0.0),
            confidence: 0.9,
            timestamp: t,
            mode: ReportMode::Online,
            track_id: 0,
        }
    }

    /// A synthetic trace: one frame per online report, then the outcome.
    pub(crate) fn trace(
        truth: Vec<TruthRecord>,
        online: Vec<EoiReport>,
        offline: Vec<EoiReport>,
    ) -> MissionTrace {
        let header = Header {
            version: 1,
            scenario: "x".into(),
            cell: "c".into(),
            seed: 0,
            time_budget: 300.0,
            frame_period: 0.5,
            start: [0.0, 0.0],
            start_projected: false,
            eois: truth.clone(),
            config: MissionConfig::default(),
            sensor: SensorModel::perfect(),
        };
        let mut records = vec![TraceRecord::Header(header)];
        for (k, r) in online.into_iter().enumerate() {
            records.push(TraceRecord::Frame(FrameRecord {
                t: r.timestamp,
                frame: k as u64 + 1,
                pose: [0.0; 4],
                detections: 1,
                filtered: 0,
                tracks: 1,
                new_tracks: 0,
                pruned: 0,
                reports: vec![r],
                newly_found: vec![],
            }));
        }
        records.push(TraceRecord::Outcome {
            t_end: 300.0,
            reason: EndReason::BudgetExhausted,
            frames: 0,
            found: truth
                .iter()
                .map(|t| FoundRecord {
                    eoi_id: t.eoi_id.clone(),
                    found: false,
                    t: None,
                })
                .collect(),
            offline,
        });
        MissionTrace {
            records,
            stats: WallStats::default(),
        }
    }

    #[test]
    fn within_radius_matches() {
        let m = match_reports(&[report("E1", 3.0, 1.0)], &[truth("E1", 0.0)], 5.0);
        assert_eq!(m.pairs.len(), 1);
        let m = match_reports(&[report("E1", 7.0, 1.0)], &[truth("E1", 0.0)], 5.0);
        assert!(m.pairs.is_empty());
        assert_eq!(m.missed, vec![0]);
        assert_eq!(m.false_positives, vec![0]);
    }

    #[test]
    fn closest_claim_wins_and_extras_are_split() {
        let rs = [
            report("E1", 6.0, 1.0),
            report("E1", 4.0, 2.0),
            report("E1", 1.0, 3.0),
        ];
        let m = match_reports(&rs, &[truth("E1", 0.0)], 5.0);
        assert_eq!(m.pairs, vec![(2, 0, 1.0)]);
        assert_eq!(m.duplicates, vec![1]);
        assert_eq!(m.false_positives, vec![0]);
        // Exhaustive one-to-one assignment: the single EOI takes the cheapest in-radius report.
        let best = rs
            .iter()
            .map(|r| r.reported_position.x)
            .filter(|&d| d <= 5.0)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(m.pairs[0].2, best);
    }

    #[test]
    fn success_rate_examples() {
        let all = trace(vec![truth("E1", 0.0)], vec![report("E1", 0.0, 5.0)], vec![]);
        assert_eq!(success_rate(&[all], 5.0).micro, 1.0);
        let none = trace(vec![truth("E1", 0.0)], vec![], vec![]);
        assert_eq!(success_rate(&[none], 5.0).micro, 0.0);

        let four = |k: usize| {
            let t: Vec<_> = (0..4)
                .map(|i| truth(&format!("E{i}"), 100.0 * i as f64))
                .collect();
            let r = (0..k)
                .map(|i| report(&format!("E{i}"), 100.0 * i as f64, 10.0))
                .collect();
            trace(t, r, vec![])
        };
        let sr = success_rate(&[four(3), four(2)], 5.0);
        assert_eq!(sr.micro, 0.625);
        assert_eq!(sr.macro_, 0.625);
    }

    #[test]
    fn online_scoring_counts_every_report() {
        let tr = trace(
            vec![truth("E1", 0.0)],
            vec![
                report("E1", 1.0, 1.0),
                report("E1", 2.0, 2.0),
                report("E1", 30.0, 3.0),
            ],
            vec![],
        );
        let p = prf(&[tr], ScoreMode::Online, 5.0);
        assert!((p.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.recall, 1.0);
        assert!((p.f1 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_reports_flag_precision() {
        let tr = trace(vec![truth("E1", 0.0)], vec![], vec![]);
        let p = prf(&[tr], ScoreMode::Online, 5.0);
        assert!(p.precision_undefined);
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn offline_perfect_report() {
        let tr = trace(vec![truth("E1", 0.0)], vec![], vec![report("E1", 0.5, 9.0)]);
        let p = prf(&[tr], ScoreMode::Offline, 5.0);
        assert_eq!((p.precision, p.recall), (1.0, 1.0));
    }

    #[test]
    fn search_time_examples() {
        let t = vec![truth("A", 0.0), truth("B", 100.0)];
        let one = trace(
            t.clone(),
            vec![report("B", 100.0, 120.0), report("A", 0.0, 60.0)],
            vec![],
        );
        let s = search_times(&[one], 5.0);
        assert_eq!(s, [Some(60.0), Some(120.0), None, None]);

        let none = trace(t.clone(), vec![], vec![]);
        let s = search_times(&[none.clone()], 5.0);
        assert!(s.iter().all(Option::is_none));
        let row = summarize("c", &[none], 5.0);
        let md = to_markdown(&[("Baseline".into(), row.clone())]);
        assert!(md.lines().last().unwrap().ends_with("| – | – | – | – |"));
        assert!(to_csv(&[("Baseline".into(), row)])
            .lines()
            .nth(1)
            .unwrap()
            .ends_with(",–,–,–,–"));

        let a = trace(vec![truth("A", 0.0)], vec![report("A", 0.0, 50.0)], vec![]);
        let b = trace(vec![truth("A", 0.0)], vec![report("A", 0.0, 70.0)], vec![]);
        assert_eq!(search_times(&[a, b], 5.0)[0], Some(60.0));
    }

    #[test]
    fn first_correct_report_sets_search_time() {
        let tr = trace(
            vec![truth("A", 0.0)],
            vec![
                report("A", 30.0, 10.0),
                report("A", 1.0, 20.0),
                report("A", 0.0, 40.0),
            ],
            vec![],
        );
        assert_eq!(first_correct_times(&tr, 5.0), vec![20.0]);
    }

    proptest! {
        #[test]
        fn f1_identity_and_radius_monotone(
            xs in proptest::collection::vec((0usize..3, -20.0f64..20.0), 0..12),
            r1 in 0.1f64..10.0,
            extra in 0.0f64..10.0,
        ) {
            let truth: Vec<_> = (0..3).map(|i| truth(&format!("E{i}"), 50.0 * i as f64)).collect();
            let rs: Vec<_> = xs.iter().enumerate().map(|(k, &(i, dx))| report(&format!("E{i}"), 50.0 * i as f64 + dx, k as f64)).collect();
            let tr = trace(truth.clone(), rs.clone(), rs.clone());
            for mode in [ScoreMode::Online, ScoreMode::Offline] {
                let p = prf(std::slice::from_ref(&tr), mode, r1);
                prop_assert_eq!(p.f1, f1(p.precision, p.recall));
                prop_assert!((0.0..=1.0).contains(&p.precision) && (0.0..=1.0).contains(&p.recall) && (0.0..=1.0).contains(&p.f1));
            }
            let a = match_reports(&rs, &truth, r1).pairs.len();
            let b = match_reports(&rs, &truth, r1 + extra).pairs.len();
            prop_assert!(a <= b);
        }
    }
}
