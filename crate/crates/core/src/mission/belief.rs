//! Per-EOI categorical belief over AOIs plus an "outside every AOI" residual.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefMap {
    aoi_ids: Vec<String>,
    eoi_ids: Vec<String>,
    /// `probs[eoi][aoi]`
    probs: Vec<Vec<f64>>,
    residual: Vec<f64>,
}

impl BeliefMap {
    /// Builds the map from raw priors (`priors[eoi][aoi]`); whatever mass the
    /// priors leave unassigned becomes the residual.
    pub fn from_priors(aoi_ids: Vec<String>, eoi_ids: Vec<String>, priors: Vec<Vec<f64>>) -> Self {
        let residual = priors
            .iter()
            .map(|row| (1.0 - row.iter().sum::<f64>()).max(0.0))
            .collect();
        Self {
            aoi_ids,
            eoi_ids,
            probs: priors,
            residual,
        }
    }

    pub fn aoi_ids(&self) -> &[String] {
        &self.aoi_ids
    }

    pub fn eoi_ids(&self) -> &[String] {
        &self.eoi_ids
    }

    pub fn n_aois(&self) -> usize {
        self.aoi_ids.len()
    }

    pub fn n_eois(&self) -> usize {
        self.eoi_ids.len()
    }

    pub fn aoi_index(&self, id: &str) -> Option<usize> {
        self.aoi_ids.iter().position(|a| a == id)
    }

    pub fn eoi_index(&self, id: &str) -> Option<usize> {
        self.eoi_ids.iter().position(|e| e == id)
    }

    pub fn prob(&self, eoi: usize, aoi: usize) -> f64 {
        self.probs[eoi][aoi]
    }

    pub fn residual(&self, eoi: usize) -> f64 {
        self.residual[eoi]
    }

    /// Probability for an AOI index, or the residual for `None`.
    pub fn location_prob(&self, eoi: usize, aoi: Option<usize>) -> f64 {
        match aoi {
            Some(a) => self.probs[eoi][a],
            None => self.residual[eoi],
        }
    }

    pub fn row(&self, eoi: usize) -> &[f64] {
        &self.probs[eoi]
    }

    /// Sum of one EOI's distribution including the residual.
    pub fn total(&self, eoi: usize) -> f64 {
        self.probs[eoi].iter().sum::<f64>() + self.residual[eoi]
    }

    /// Bayes update after searching `aoi` for `eoi` without finding it.
    ///
    /// With `c` the covered fraction and `q` the per-pass detection probability,
    /// the miss likelihood is `1 - c q` inside the searched AOI and 1 everywhere
    /// else (residual included). If the evidence rules out every hypothesis that
    /// had mass, the mass moves to the residual.
    pub fn posterior_after_negative_search(
        &self,
        eoi: usize,
        aoi: usize,
        c: f64,
        q: f64,
    ) -> BeliefMap {
        let mut out = self.clone();
        out.apply_negative_search(eoi, aoi, c, q);
        out
    }

    pub fn apply_negative_search(&mut self, eoi: usize, aoi: usize, c: f64, q: f64) {
        let detect = (c.clamp(0.0, 1.0) * q.clamp(0.0, 1.0)).clamp(0.0, 1.0);
        if detect == 0.0 {
            return;
        }
        let row = &mut self.probs[eoi];
        row[aoi] *= 1.0 - detect;
        let total: f64 = row.iter().sum::<f64>() + self.residual[eoi];
        if total <= 0.0 {
            row.iter_mut().for_each(|p| *p = 0.0);
            self.residual[eoi] = 1.0;
            return;
        }
        row.iter_mut().for_each(|p| *p /= total);
        self.residual[eoi] /= total;
    }

    /// Positive evidence: all of `eoi`'s mass moves to `aoi` (or to the residual).
    pub fn collapse(&mut self, eoi: usize, aoi: Option<usize>) {
        self.probs[eoi].iter_mut().for_each(|p| *p = 0.0);
        self.residual[eoi] = 0.0;
        match aoi {
            Some(a) => self.probs[eoi][a] = 1.0,
            None => self.residual[eoi] = 1.0,
        }
    }

    /// Forces each row to sum to one; used once on priors that already sum to 1
    /// up to rounding.
    pub fn normalize(&mut self) {
        for e in 0..self.n_eois() {
            let t = self.total(e);
            if t > 0.0 {
                self.probs[e].iter_mut().for_each(|p| *p /= t);
                self.residual[e] /= t;
            }
        }
    }
}
