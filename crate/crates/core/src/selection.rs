//! AOI selection: visit order and per-AOI time allocation under a time budget.
//!
//! Objective for a plan visiting AOIs `a_1..a_n` with allocations `t_i`:
//! `sum_i W_i q min(1, t_i / F_i) - lambda * travel`, where `W_i` is the summed
//! belief of the still-unfound EOIs in `a_i` and `F_i` its full sweep time.
//! Allocations live on a `time_quantum` grid with at least one quantum per leg.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::SimRng;

/// Objective values closer than this are treated as ties.
pub const OBJECTIVE_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Optimal,
    Greedy,
    Random,
}

impl SelectionMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Self::Optimal),
            "greedy" => Ok(Self::Greedy),
            "random" => Ok(Self::Random),
            other => Err(Error::Config(format!(
                "unknown selection mode '{other}' (optimal|greedy|random)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Greedy => "greedy",
            Self::Random => "random",
        }
    }
}

/// Lawnmower lower bound on the time to sweep an area.
pub fn full_coverage_time(area: f64, speed: f64, sweep_width: f64) -> f64 {
    if area <= 0.0 {
        return 0.0;
    }
    area / (speed * sweep_width)
}

/// Expected detections from spending `t_alloc` in an AOI whose unfound EOIs
/// have beliefs `beliefs`.
pub fn expected_gain(beliefs: &[f64], t_alloc: f64, full_time: f64, q: f64) -> f64 {
    let w: f64 = beliefs.iter().sum();
    w * q * coverage_ratio(t_alloc, full_time)
}

fn coverage_ratio(t: f64, full: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if full <= 0.0 {
        1.0
    } else {
        (t / full).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionInstance {
    pub aoi_ids: Vec<String>,
    pub areas: Vec<f64>,
    /// `beliefs[aoi][eoi]`, with found EOIs already zeroed.
    pub beliefs: Vec<Vec<f64>>,
    /// Travel seconds from the current UAV position to each AOI.
    pub travel_from_start: Vec<f64>,
    /// Travel seconds between AOIs.
    pub travel: Vec<Vec<f64>>,
    pub full_coverage_time: Vec<f64>,
    pub budget: f64,
    pub time_quantum: f64,
    pub p_detect: f64,
    pub lambda: f64,
}

impl SelectionInstance {
    pub fn len(&self) -> usize {
        self.aoi_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aoi_ids.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.beliefs[i].iter().sum()
    }

    pub fn gain(&self, i: usize, t: f64) -> f64 {
        expected_gain(
            &self.beliefs[i],
            t,
            self.full_coverage_time[i],
            self.p_detect,
        )
    }

    fn leg_travel(&self, prev: Option<usize>, i: usize) -> f64 {
        match prev {
            None => self.travel_from_start[i],
            Some(p) => self.travel[p][i],
        }
    }

    pub fn sequence_travel(&self, seq: &[usize]) -> f64 {
        let mut prev = None;
        let mut total = 0.0;
        for &i in seq {
            total += self.leg_travel(prev, i);
            prev = Some(i);
        }
        total
    }

    /// Whole quanta available after paying `travel`.
    fn quanta_after(&self, travel: f64) -> i64 {
        let rem = self.budget - travel;
        if rem < 0.0 {
            return -1;
        }
        // guard against 29.999999 / 10 style rounding
        ((rem / self.time_quantum) + 1e-9).floor() as i64
    }

    pub fn check(&self) -> Result<()> {
        let n = self.len();
        let ok = self.areas.len() == n
            && self.beliefs.len() == n
            && self.travel_from_start.len() == n
            && self.travel.len() == n
            && self.travel.iter().all(|r| r.len() == n)
            && self.full_coverage_time.len() == n;
        if !ok {
            return Err(Error::Config(
                "selection instance has inconsistent sizes".into(),
            ));
        }
        if !(self.time_quantum > 0.0)
            || !(self.lambda >= 0.0)
            || !(0.0..=1.0).contains(&self.p_detect)
        {
            return Err(Error::Config(
                "time quantum must be positive, lambda nonnegative, p_detect in [0,1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub aoi_id: String,
    pub allocated_time: f64,
    pub travel_time: f64,
    pub expected_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItineraryPlan {
    pub legs: Vec<Leg>,
    pub expected_gain: f64,
    pub travel_time: f64,
    pub total_time: f64,
    /// Expected gain minus lambda times travel.
    pub objective: f64,
    pub infeasible: bool,
}

impl ItineraryPlan {
    pub fn empty(infeasible: bool) -> Self {
        Self {
            legs: Vec::new(),
            expected_gain: 0.0,
            travel_time: 0.0,
            total_time: 0.0,
            objective: 0.0,
            infeasible,
        }
    }
}

/// Best quantum counts (each >= 1) for a fixed sequence given `k_total` quanta,
/// by marginal-gain water-filling. Gains are concave in the count, so the
/// greedy fill is optimal.
fn allocate(inst: &SelectionInstance, seq: &[usize], k_total: i64) -> Option<(Vec<i64>, f64)> {
    let n = seq.len() as i64;
    if k_total < n {
        return None;
    }
    let q = inst.time_quantum;
    let mut k = vec![1i64; seq.len()];
    let mut left = k_total - n;
    let marginal = |i: usize, ki: i64| {
        inst.gain(seq[i], (ki + 1) as f64 * q) - inst.gain(seq[i], ki as f64 * q)
    };
    while left > 0 {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..seq.len() {
            let m = marginal(i, k[i]);
            if m > OBJECTIVE_TIE && best.is_none_or(|(bm, _)| m > bm) {
                best = Some((m, i));
            }
        }
        let Some((_, i)) = best else { break };
        k[i] += 1;
        left -= 1;
    }
    let gain = seq
        .iter()
        .zip(&k)
        .map(|(&a, &ki)| inst.gain(a, ki as f64 * q))
        .sum();
    Some((k, gain))
}

fn build_plan(inst: &SelectionInstance, seq: &[usize], quanta: &[i64]) -> ItineraryPlan {
    let mut legs = Vec::new();
    let mut prev = None;
    let (mut gain, mut travel, mut alloc) = (0.0, 0.0, 0.0);
    for (&a, &k) in seq.iter().zip(quanta) {
        let tt = inst.leg_travel(prev, a);
        let t = k as f64 * inst.time_quantum;
        let g = inst.gain(a, t);
        legs.push(Leg {
            aoi_id: inst.aoi_ids[a].clone(),
            allocated_time: t,
            travel_time: tt,
            expected_gain: g,
        });
        gain += g;
        travel += tt;
        alloc += t;
        prev = Some(a);
    }
    ItineraryPlan {
        legs,
        expected_gain: gain,
        travel_time: travel,
        total_time: travel + alloc,
        objective: gain - inst.lambda * travel,
        infeasible: false,
    }
}

/// True when no AOI can be reached with at least one quantum to spare.
fn infeasible(inst: &SelectionInstance) -> bool {
    (0..inst.len()).all(|i| inst.quanta_after(inst.travel_from_start[i]) < 1)
}

/// Whether candidate (objective, sequence) beats the incumbent under the tie rule.
fn better(
    inst: &SelectionInstance,
    obj: f64,
    seq: &[usize],
    best_obj: f64,
    best_seq: &[usize],
) -> bool {
    if obj > best_obj + OBJECTIVE_TIE {
        return true;
    }
    if obj < best_obj - OBJECTIVE_TIE {
        return false;
    }
    if seq.len() != best_seq.len() {
        return seq.len() < best_seq.len();
    }
    let ids = |s: &[usize]| {
        s.iter()
            .map(|&i| inst.aoi_ids[i].clone())
            .collect::<Vec<_>>()
    };
    ids(seq) < ids(best_seq)
}

struct Search<'a> {
    inst: &'a SelectionInstance,
    order: Vec<usize>,
    best_obj: f64,
    best_seq: Vec<usize>,
    best_quanta: Vec<i64>,
    /// Least travel seen for each (visited set, last AOI).
    frontier: std::collections::HashMap<(u32, usize), f64>,
    /// Every AOI index; the bound relaxes over all of them.
    all: Vec<usize>,
}

impl Search<'_> {
    /// Fractional-knapsack bound on the gain from `time` seconds spread over `cands`.
    fn gain_bound(&self, cands: &[usize], time: f64) -> f64 {
        let inst = self.inst;
        let mut free = 0.0;
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        for &i in cands {
            let w = inst.weight(i) * inst.p_detect;
            if w <= 0.0 {
                continue;
            }
            let f = inst.full_coverage_time[i];
            if f <= 0.0 {
                free += w;
            } else {
                pieces.push((w / f, f));
            }
        }
        pieces.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut left = time.max(0.0);
        let mut g = free;
        for (rate, len) in pieces {
            if left <= 0.0 {
                break;
            }
            let t = len.min(left);
            g += rate * t;
            left -= t;
        }
        g
    }

    fn dfs(&mut self, seq: &mut Vec<usize>, mask: u32, travel: f64) {
        let inst = self.inst;
        if let Some(&last) = seq.last() {
            // Gain depends only on the visited set and the quanta left, and the
            // future only on (set, last, travel): a prefix that travels no less
            // than one already explored (in lexicographic order) is dominated.
            match self.frontier.get(&(mask, last)) {
                Some(&t) if travel >= t - OBJECTIVE_TIE => return,
                _ => {
                    self.frontier.insert((mask, last), travel);
                }
            }
            let k_total = inst.quanta_after(travel);
            let (quanta, gain) = allocate(inst, seq, k_total).expect("enough quanta");
            let obj = gain - inst.lambda * travel;
            if better(inst, obj, seq, self.best_obj, &self.best_seq) {
                self.best_obj = obj;
                self.best_seq = seq.clone();
                self.best_quanta = quanta;
            }
            let bound = self.gain_bound(&self.all, inst.budget - travel) - inst.lambda * travel;
            if bound < self.best_obj - OBJECTIVE_TIE {
                return;
            }
        }
        let prev = seq.last().copied();
        for idx in 0..self.order.len() {
            let i = self.order[idx];
            if mask & (1 << i) != 0 {
                continue;
            }
            let t = travel + inst.leg_travel(prev, i);
            // one quantum per leg is mandatory
            if inst.quanta_after(t) < seq.len() as i64 + 1 {
                continue;
            }
            seq.push(i);
            self.dfs(seq, mask | (1 << i), t);
            seq.pop();
        }
    }
}

/// Most AOIs the exact solver accepts.
pub const MAX_EXACT_AOIS: usize = 16;

/// Exact maximiser of the objective over subsets, orders and quantised allocations.
pub fn select_plan(inst: &SelectionInstance) -> Result<ItineraryPlan> {
    inst.check()?;
    if inst.is_empty() || infeasible(inst) {
        return Ok(ItineraryPlan::empty(!inst.is_empty()));
    }
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.sort_by(|&a, &b| inst.aoi_ids[a].cmp(&inst.aoi_ids[b]));
    if inst.len() > MAX_EXACT_AOIS {
        return Err(Error::Config(format!(
            "exact selection supports at most {MAX_EXACT_AOIS} AOIs, got {}",
            inst.len()
        )));
    }
    let mut s = Search {
        inst,
        order,
        best_obj: 0.0,
        best_seq: Vec::new(),
        best_quanta: Vec::new(),
        frontier: Default::default(),
        all: (0..inst.len()).collect(),
    };
    s.dfs(&mut Vec::new(), 0, 0.0);
    if s.best_seq.is_empty() {
        return Ok(ItineraryPlan::empty(false));
    }
    Ok(build_plan(inst, &s.best_seq, &s.best_quanta))
}

/// Re-solves with updated beliefs, position and remaining budget; the contract
/// is that of [`select_plan`].
pub fn replan(inst: &SelectionInstance) -> Result<ItineraryPlan> {
    select_plan(inst)
}

/// Visits `seq` in order with full-coverage allocations rounded up to the
/// quantum, truncating the last leg (or dropping it) when the budget runs out.
fn sequential_plan(inst: &SelectionInstance, seq: &[usize]) -> ItineraryPlan {
    let mut chosen = Vec::new();
    let mut quanta = Vec::new();
    let mut travel = 0.0;
    let mut spent_quanta = 0i64;
    let mut prev = None;
    for &i in seq {
        let t = travel + inst.leg_travel(prev, i);
        let avail = inst.quanta_after(t) - spent_quanta;
        if avail < 1 {
            break;
        }
        let want = ((inst.full_coverage_time[i] / inst.time_quantum) - 1e-9)
            .ceil()
            .max(1.0) as i64;
        let k = want.min(avail);
        chosen.push(i);
        quanta.push(k);
        spent_quanta += k;
        travel = t;
        prev = Some(i);
        if k < want {
            break;
        }
    }
    if chosen.is_empty() {
        return ItineraryPlan::empty(infeasible(inst));
    }
    build_plan(inst, &chosen, &quanta)
}

/// Belief-ordered baseline: AOIs by descending unfound-EOI belief mass, ties by id.
pub fn greedy_plan(inst: &SelectionInstance) -> Result<ItineraryPlan> {
    inst.check()?;
    let mut seq: Vec<usize> = (0..inst.len()).filter(|&i| inst.weight(i) > 0.0).collect();
    seq.sort_by(|&a, &b| {
        inst.weight(b)
            .total_cmp(&inst.weight(a))
            .then(inst.aoi_ids[a].cmp(&inst.aoi_ids[b]))
    });
    Ok(sequential_plan(inst, &seq))
}

/// Random-route baseline: a uniformly shuffled visit order, beliefs ignored.
pub fn random_plan(inst: &SelectionInstance, rng: &mut SimRng) -> Result<ItineraryPlan> {
    inst.check()?;
    let mut seq: Vec<usize> = (0..inst.len()).collect();
    seq.sort_by(|&a, &b| inst.aoi_ids[a].cmp(&inst.aoi_ids[b]));
    seq.shuffle(rng);
    Ok(sequential_plan(inst, &seq))
}

pub fn plan(
    inst: &SelectionInstance,
    mode: SelectionMode,
    rng: &mut SimRng,
) -> Result<ItineraryPlan> {
    match mode {
        SelectionMode::Optimal => select_plan(inst),
        SelectionMode::Greedy => greedy_plan(inst),
        SelectionMode::Random => random_plan(inst, rng),
    }
}

/// Exhaustive enumeration of subsets x orders x quantum compositions. Only for
/// small instances; used as the test oracle.
pub fn brute_force_objective(inst: &SelectionInstance) -> f64 {
    fn rec(inst: &SelectionInstance, seq: &mut Vec<usize>, used: &mut Vec<bool>, best: &mut f64) {
        if !seq.is_empty() {
            let travel = inst.sequence_travel(seq);
            let k_total = inst.quanta_after(travel);
            if k_total < seq.len() as i64 {
                return;
            }
            let mut k = vec![1i64; seq.len()];
            compositions(
                inst,
                seq,
                &mut k,
                0,
                k_total - seq.len() as i64,
                travel,
                best,
            );
        }
        for i in 0..inst.len() {
            if !used[i] {
                used[i] = true;
                seq.push(i);
                rec(inst, seq, used, best);
                seq.pop();
                used[i] = false;
            }
        }
    }
    fn compositions(
        inst: &SelectionInstance,
        seq: &[usize],
        k: &mut Vec<i64>,
        pos: usize,
        left: i64,
        travel: f64,
        best: &mut f64,
    ) {
        if pos == seq.len() {
            let gain: f64 = seq
                .iter()
                .zip(k.iter())
                .map(|(&a, &ki)| inst.gain(a, ki as f64 * inst.time_quantum))
                .sum();
            let obj = gain - inst.lambda * travel;
            if obj > *best {
                *best = obj;
            }
            return;
        }
        for extra in 0..=left {
            k[pos] = 1 + extra;
            compositions(inst, seq, k, pos + 1, left - extra, travel, best);
        }
        k[pos] = 1;
    }
    let mut best = 0.0;
    rec(
        inst,
        &mut Vec::new(),
        &mut vec![false; inst.len()],
        &mut best,
    );
    best
}
