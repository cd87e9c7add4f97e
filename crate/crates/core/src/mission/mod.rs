//! Scenario geometry, mission semantics and the shared grids.

mod belief;
mod format;
mod generate;
mod grid;

pub use belief::BeliefMap;
pub use format::{load_scenario, parse_scenario, write_scenario, OccupancySource};
pub use generate::{generate_scenario, GeneratorConfig};
pub use grid::{OccupancyGrid, NSOG_MAGIC, NSOG_VERSION};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Polygon2, Rect};
use crate::sensor::{Pose, SensorModel};

pub const DEFAULT_TIME_BUDGET: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleType {
    Sedan,
    Suv,
}

impl VehicleType {
    pub const ALL: [VehicleType; 2] = [VehicleType::Sedan, VehicleType::Suv];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            VehicleType::Sedan => "sedan",
            VehicleType::Suv => "suv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
    }
}

/// The fixed eight-colour palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
    Green,
    Yellow,
    White,
    Black,
    Silver,
    Orange,
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Red,
        Color::Blue,
        Color::Green,
        Color::Yellow,
        Color::White,
        Color::Black,
        Color::Silver,
        Color::Orange,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Blue => "blue",
            Color::Green => "green",
            Color::Yellow => "yellow",
            Color::White => "white",
            Color::Black => "black",
            Color::Silver => "silver",
            Color::Orange => "orange",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aoi {
    pub id: String,
    pub boundary: Polygon2,
    /// EOI id -> prior probability that the EOI lies in this AOI.
    pub priors: Vec<(String, f64)>,
}

impl Aoi {
    pub fn prior(&self, eoi: &str) -> f64 {
        self.priors
            .iter()
            .find(|(e, _)| e == eoi)
            .map_or(0.0, |(_, p)| *p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Koz {
    pub id: String,
    pub boundary: Polygon2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EoiDescriptor {
    pub id: String,
    pub vehicle_type: VehicleType,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthEntity {
    pub id: String,
    pub position: crate::geometry::Point3,
    pub vehicle_type: VehicleType,
    pub color: Color,
    pub is_eoi: bool,
    /// Which EOI this entity realises, when `is_eoi`.
    pub eoi_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map_extent: Rect,
    pub aois: Vec<Aoi>,
    pub kozs: Vec<Koz>,
    pub eois: Vec<EoiDescriptor>,
    pub entities: Vec<GroundTruthEntity>,
    pub occupancy: OccupancyGrid,
    pub occupancy_source: OccupancySource,
    pub time_budget: f64,
    pub uav_start: Pose,
    pub seed: u64,
    /// Sensor parameters from the optional `[sensor]` section.
    pub sensor: Option<SensorModel>,
}

impl Scenario {
    pub fn eoi_index(&self, id: &str) -> Option<usize> {
        self.eois.iter().position(|e| e.id == id)
    }

    /// First AOI (in declaration order) whose closed boundary contains `p`.
    pub fn aoi_containing(&self, p: Point2) -> Option<usize> {
        self.aois.iter().position(|a| a.boundary.contains(p))
    }

    pub fn initial_belief(&self) -> BeliefMap {
        let priors = self
            .eois
            .iter()
            .map(|e| self.aois.iter().map(|a| a.prior(&e.id)).collect())
            .collect();
        BeliefMap::from_priors(
            self.aois.iter().map(|a| a.id.clone()).collect(),
            self.eois.iter().map(|e| e.id.clone()).collect(),
            priors,
        )
    }

    /// Ground-truth entity realising the EOI at `eoi` (index into `eois`).
    pub fn eoi_entity(&self, eoi: usize) -> Option<&GroundTruthEntity> {
        let id = &self.eois[eoi].id;
        self.entities
            .iter()
            .find(|e| e.is_eoi && e.eoi_id.as_deref() == Some(id.as_str()))
    }

    pub fn koz_polygons(&self) -> Vec<Polygon2> {
        self.kozs.iter().map(|k| k.boundary.clone()).collect()
    }
}

/// One failed scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub element: String,
    pub detail: String,
}

impl Violation {
    fn new(invariant: &str, element: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            invariant: invariant.into(),
            element: element.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.invariant, self.element, self.detail)
    }
}

/// Checks every scenario invariant; an empty list means the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut v = Vec::new();
    let ext = s.map_extent;

    if !(s.time_budget > 0.0) {
        v.push(Violation::new(
            "time_budget_positive",
            "map",
            format!("time_budget = {}", s.time_budget),
        ));
    }
    if !(ext.width() > 0.0 && ext.height() > 0.0) {
        v.push(Violation::new(
            "map_extent_nonempty",
            "map",
            "extent has no area",
        ));
    }
    if !(s.occupancy.cell_size() > 0.0) {
        v.push(Violation::new(
            "occupancy_cell_size_positive",
            "occupancy",
            "cell_size must be > 0",
        ));
    }
    if !ext.contains(s.uav_start.position.xy()) {
        v.push(Violation::new(
            "uav_start_in_map",
            "map",
            "UAV start outside map extent",
        ));
    }

    let mut ids = std::collections::BTreeSet::new();
    for id in s
        .aois
        .iter()
        .map(|a| &a.id)
        .chain(s.kozs.iter().map(|k| &k.id))
        .chain(s.eois.iter().map(|e| &e.id))
        .chain(s.entities.iter().map(|e| &e.id))
    {
        if !ids.insert(id.as_str()) {
            v.push(Violation::new(
                "unique_ids",
                id.clone(),
                "identifier declared more than once",
            ));
        }
    }

    for a in &s.aois {
        if a.boundary.vertices.iter().any(|p| !ext.contains(*p)) {
            v.push(Violation::new(
                "aoi_within_map",
                a.id.clone(),
                "AOI vertex outside map extent",
            ));
        }
        for (e, p) in &a.priors {
            if !(0.0..=1.0).contains(p) {
                v.push(Violation::new(
                    "prior_in_unit_interval",
                    a.id.clone(),
                    format!("prior for {e} = {p}"),
                ));
            }
            if s.eoi_index(e).is_none() {
                v.push(Violation::new(
                    "prior_references_known_eoi",
                    a.id.clone(),
                    format!("unknown EOI {e}"),
                ));
            }
        }
    }
    for k in &s.kozs {
        if k.boundary.vertices.iter().any(|p| !ext.contains(*p)) {
            v.push(Violation::new(
                "koz_within_map",
                k.id.clone(),
                "KOZ vertex outside map extent",
            ));
        }
    }

    for e in &s.eois {
        let sum: f64 = s.aois.iter().map(|a| a.prior(&e.id)).sum();
        if sum > 1.0 + 1e-9 {
            v.push(Violation::new(
                "prior_sum_at_most_one",
                e.id.clone(),
                format!("priors for {} sum to {sum}", e.id),
            ));
        }
    }

    for ent in &s.entities {
        let ground = s.occupancy.ground_height(ent.position.xy());
        if (ent.position.z - ground).abs() > 1e-6 {
            v.push(Violation::new(
                "entity_on_ground",
                ent.id.clone(),
                format!("z = {} but ground is at {ground}", ent.position.z),
            ));
        }
        if !ext.contains(ent.position.xy()) {
            v.push(Violation::new(
                "entity_in_map",
                ent.id.clone(),
                "entity outside map extent",
            ));
        }
        if ent.is_eoi {
            match ent.eoi_id.as_deref().and_then(|id| s.eoi_index(id)) {
                Some(i) => {
                    let d = &s.eois[i];
                    if d.vehicle_type != ent.vehicle_type || d.color != ent.color {
                        v.push(Violation::new(
                            "eoi_entity_matches_descriptor",
                            ent.id.clone(),
                            format!("entity attributes differ from EOI {}", d.id),
                        ));
                    }
                }
                None => v.push(Violation::new(
                    "eoi_entity_references_eoi",
                    ent.id.clone(),
                    "no such EOI",
                )),
            }
        }
    }

    for (i, e) in s.eois.iter().enumerate() {
        let Some(ent) = s.eoi_entity(i) else {
            v.push(Violation::new(
                "eoi_has_entity",
                e.id.clone(),
                "no ground-truth entity for EOI",
            ));
            continue;
        };
        let p = ent.position.xy();
        let in_candidate = s
            .aois
            .iter()
            .any(|a| a.prior(&e.id) > 0.0 && a.boundary.contains(p));
        if !in_candidate {
            v.push(Violation::new(
                "eoi_outside_candidate_aois",
                e.id.clone(),
                "EOI entity is not inside any AOI with nonzero prior for it",
            ));
        }
        // No other entity with the same description may sit in a candidate AOI.
        for other in &s.entities {
            if other.id == ent.id || other.vehicle_type != e.vehicle_type || other.color != e.color
            {
                continue;
            }
            let q = other.position.xy();
            if let Some(a) = s
                .aois
                .iter()
                .find(|a| a.prior(&e.id) > 0.0 && a.boundary.contains(q))
            {
                v.push(Violation::new(
                    "ambiguous_descriptor",
                    e.id.clone(),
                    format!(
                        "entity {} matches {} inside candidate AOI {}",
                        other.id, e.id, a.id
                    ),
                ));
            }
        }
    }
    v
}
