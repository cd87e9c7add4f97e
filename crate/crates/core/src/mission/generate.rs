//! Seeded synthetic scenario generator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dilate, Point2, Point3, Polygon2, Rect};
use crate::mission::{
    validate_scenario, Aoi, Color, EoiDescriptor, GroundTruthEntity, Koz, OccupancyGrid,
    OccupancySource, Scenario, VehicleType,
};
use crate::sensor::{Pose, SimRng};

/// Inclusive range of integers.
pub type Count = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub map_size: f64,
    pub cell_size: f64,
    pub layers: usize,
    pub time_budget: f64,
    pub altitude: f64,
    pub n_aois: Count,
    pub n_eois: Count,
    pub n_kozs: Count,
    pub n_distractors: Count,
    pub n_buildings: Count,
    /// Side length range for AOI bounding boxes, meters.
    pub aoi_size: (f64, f64),
    pub koz_size: (f64, f64),
    /// Building footprint side range, in cells.
    pub building_cells: Count,
    /// Building height range, in layers.
    pub building_layers: Count,
    /// Probability a building is a tower reaching above `altitude`.
    pub tower_prob: f64,
    /// Dirichlet concentration for AOI priors.
    pub prior_concentration: f64,
    /// Dirichlet concentration of the "outside every AOI" component.
    pub residual_concentration: f64,
    /// Probability a distractor copies an EOI descriptor exactly (placed outside AOIs).
    pub exact_distractor_prob: f64,
    /// Entities keep this distance from KOZ boundaries.
    pub koz_clearance: f64,
    pub min_entity_spacing: f64,
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            map_size: 500.0,
            cell_size: 5.0,
            layers: 12,
            time_budget: 300.0,
            altitude: 40.0,
            n_aois: (2, 6),
            n_eois: (1, 4),
            n_kozs: (0, 3),
            n_distractors: (4, 12),
            n_buildings: (10, 30),
            aoi_size: (100.0, 200.0),
            koz_size: (20.0, 60.0),
            building_cells: (2, 5),
            building_layers: (2, 6),
            tower_prob: 0.1,
            prior_concentration: 1.0,
            residual_concentration: 0.5,
            exact_distractor_prob: 0.3,
            koz_clearance: 8.0,
            min_entity_spacing: 8.0,
            max_attempts: 64,
        }
    }
}

impl GeneratorConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("generator: {m}")));
        let ordered = |c: Count| c.0 <= c.1;
        if !(self.map_size > 0.0 && self.cell_size > 0.0 && self.layers > 0) {
            return bad("map_size, cell_size and layers must be positive");
        }
        if !(2..=6).contains(&self.n_aois.0)
            || !(2..=6).contains(&self.n_aois.1)
            || !ordered(self.n_aois)
        {
            return bad("n_aois must lie within 2..=6");
        }
        if !(1..=4).contains(&self.n_eois.0)
            || !(1..=4).contains(&self.n_eois.1)
            || !ordered(self.n_eois)
        {
            return bad("n_eois must lie within 1..=4");
        }
        if ![
            self.n_kozs,
            self.n_distractors,
            self.n_buildings,
            self.building_cells,
            self.building_layers,
        ]
        .into_iter()
        .all(ordered)
        {
            return bad("count ranges must be ordered (min <= max)");
        }
        if !(self.aoi_size.0 > 0.0
            && self.aoi_size.0 <= self.aoi_size.1
            && self.aoi_size.1 < self.map_size)
        {
            return bad("aoi_size must be positive, ordered and smaller than the map");
        }
        if !(self.koz_size.0 > 0.0 && self.koz_size.0 <= self.koz_size.1) {
            return bad("koz_size must be positive and ordered");
        }
        if !(self.prior_concentration > 0.0 && self.residual_concentration > 0.0) {
            return bad("Dirichlet concentrations must be positive");
        }
        if !(self.time_budget > 0.0) {
            return bad("time_budget must be positive");
        }
        Ok(())
    }
}

const PLACEMENT_TRIES: usize = 400;
const AOI_GAP: f64 = 10.0;

fn count(rng: &mut SimRng, c: Count) -> usize {
    rng.random_range(c.0..=c.1)
}

fn uniform(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Rounds down to 4 decimals so files stay readable and sums never grow past 1.
fn floor4(x: f64) -> f64 {
    (x * 1e4).floor() / 1e4
}

/// Either the rectangle itself or a convex polygon inscribed in it.
fn aoi_shape(rng: &mut SimRng, r: Rect) -> Polygon2 {
    if rng.random::<f64>() < 0.7 {
        return r.to_polygon();
    }
    let c = Point2::new(0.5 * (r.min.x + r.max.x), 0.5 * (r.min.y + r.max.y));
    let (ax, ay) = (0.5 * r.width(), 0.5 * r.height());
    let n = rng.random_range(5..=8);
    let offset = uniform(rng, 0.0, std::f64::consts::TAU);
    let pts = (0..n)
        .map(|k| {
            let th = offset + std::f64::consts::TAU * k as f64 / n as f64;
            Point2::new((c.x + ax * th.cos()).round(), (c.y + ay * th.sin()).round())
        })
        .collect();
    Polygon2::new(pts)
}

struct Draft {
    extent: Rect,
    grid: OccupancyGrid,
    boxes: Vec<[f64; 6]>,
    kozs: Vec<Koz>,
    koz_guard: Vec<Polygon2>,
    aois: Vec<Aoi>,
    aoi_boxes: Vec<Rect>,
    entities: Vec<GroundTruthEntity>,
}

impl Draft {
    fn free_spot(&self, cfg: &GeneratorConfig, p: Point2) -> bool {
        if !self.extent.expanded(-cfg.cell_size).contains(p) {
            return false;
        }
        if self.grid.ground_height(p) != 0.0 {
            return false;
        }
        if self.koz_guard.iter().any(|k| k.contains(p)) {
            return false;
        }
        self.entities
            .iter()
            .all(|e| e.position.xy().dist(p) >= cfg.min_entity_spacing)
    }
}

/// Builds a random valid scenario. Pure in (`seed`, `cfg`).
pub fn generate_scenario(seed: u64, cfg: &GeneratorConfig) -> Result<Scenario> {
    cfg.check()?;
    let mut rng = SimRng::seed_from_u64(seed);
    let mut last = String::new();
    for _ in 0..cfg.max_attempts {
        match attempt(seed, cfg, &mut rng) {
            Ok(s) => {
                let v = validate_scenario(&s);
                if v.is_empty() {
                    return Ok(s);
                }
                last = v[0].to_string();
            }
            Err(msg) => last = msg,
        }
    }
    Err(Error::Generation(format!(
        "seed {seed}: no valid scenario after {} attempts (last failure: {last})",
        cfg.max_attempts
    )))
}

fn attempt(
    seed: u64,
    cfg: &GeneratorConfig,
    rng: &mut SimRng,
) -> std::result::Result<Scenario, String> {
    let size = cfg.map_size;
    let extent = Rect::new(Point2::new(0.0, 0.0), Point2::new(size, size));
    let n_cells = (size / cfg.cell_size).ceil() as usize;
    let grid = OccupancyGrid::empty(extent.min, cfg.cell_size, [n_cells, n_cells, cfg.layers]);

    // Launch from a corner, inside the map.
    let inset = 10.0;
    let corners = [
        Point2::new(inset, inset),
        Point2::new(size - inset, inset),
        Point2::new(inset, size - inset),
        Point2::new(size - inset, size - inset),
    ];
    let start = corners[rng.random_range(0..4)];
    let start_guard = Rect::new(start, start).expanded(30.0);

    let mut d = Draft {
        extent,
        grid,
        boxes: Vec::new(),
        kozs: Vec::new(),
        koz_guard: Vec::new(),
        aois: Vec::new(),
        aoi_boxes: Vec::new(),
        entities: Vec::new(),
    };

    // AOIs: non-overlapping bounding boxes with a gap.
    let n_aois = count(rng, cfg.n_aois);
    for i in 0..n_aois {
        let mut placed = false;
        for _ in 0..PLACEMENT_TRIES {
            let w = uniform(rng, cfg.aoi_size.0, cfg.aoi_size.1).round();
            let h = uniform(rng, cfg.aoi_size.0, cfg.aoi_size.1).round();
            let x = uniform(rng, 0.0, size - w).round();
            let y = uniform(rng, 0.0, size - h).round();
            let r = Rect::new(Point2::new(x, y), Point2::new(x + w, y + h));
            if r.intersects(&start_guard)
                || d.aoi_boxes
                    .iter()
                    .any(|o| o.expanded(AOI_GAP).intersects(&r))
            {
                continue;
            }
            d.aois.push(Aoi {
                id: format!("A{}", i + 1),
                boundary: aoi_shape(rng, r),
                priors: Vec::new(),
            });
            d.aoi_boxes.push(r);
            placed = true;
            break;
        }
        if !placed {
            return Err(format!("could not place AOI {} without overlap", i + 1));
        }
    }

    // KOZs: rectangles anywhere except over the launch point.
    let n_kozs = count(rng, cfg.n_kozs);
    for i in 0..n_kozs {
        let mut placed = false;
        for _ in 0..PLACEMENT_TRIES {
            let w = uniform(rng, cfg.koz_size.0, cfg.koz_size.1).round();
            let h = uniform(rng, cfg.koz_size.0, cfg.koz_size.1).round();
            let x = uniform(rng, 0.0, size - w).round();
            let y = uniform(rng, 0.0, size - h).round();
            let r = Rect::new(Point2::new(x, y), Point2::new(x + w, y + h));
            if r.intersects(&start_guard) {
                continue;
            }
            // keep at least half of every AOI outside the zone
            if d.aoi_boxes
                .iter()
                .any(|a| overlap_area(a, &r) > 0.5 * a.width() * a.height())
            {
                continue;
            }
            let poly = r.to_polygon();
            d.koz_guard.push(dilate(&poly, cfg.koz_clearance));
            d.kozs.push(Koz {
                id: format!("K{}", i + 1),
                boundary: poly,
            });
            placed = true;
            break;
        }
        if !placed {
            return Err(format!("could not place KOZ {}", i + 1));
        }
    }

    // Buildings: grid-aligned boxes; a few towers rise through flight altitude.
    let n_buildings = count(rng, cfg.n_buildings);
    let cs = cfg.cell_size;
    let top_layer = cfg.layers;
    let tower_min = ((cfg.altitude / cs).floor() as usize + 1).min(top_layer);
    for _ in 0..n_buildings {
        let mut placed = false;
        for _ in 0..PLACEMENT_TRIES {
            let wx = count(rng, cfg.building_cells);
            let wy = count(rng, cfg.building_cells);
            if wx + 2 > n_cells || wy + 2 > n_cells {
                break;
            }
            let ix = rng.random_range(1..n_cells - wx);
            let iy = rng.random_range(1..n_cells - wy);
            let tower = rng.random::<f64>() < cfg.tower_prob;
            let layers = if tower {
                rng.random_range(tower_min..=top_layer)
            } else {
                count(rng, cfg.building_layers).min(tower_min.saturating_sub(1).max(1))
            };
            let b = [
                ix as f64 * cs,
                iy as f64 * cs,
                0.0,
                (ix + wx) as f64 * cs,
                (iy + wy) as f64 * cs,
                layers as f64 * cs,
            ];
            let foot = Rect::new(Point2::new(b[0], b[1]), Point2::new(b[3], b[4]));
            if foot.intersects(&start_guard) {
                continue;
            }
            d.grid
                .fill_box(Point3::new(b[0], b[1], b[2]), Point3::new(b[3], b[4], b[5]));
            d.boxes.push(b);
            placed = true;
            break;
        }
        if !placed {
            break;
        }
    }

    // EOIs with distinct descriptors.
    let n_eois = count(rng, cfg.n_eois);
    let mut descriptors: Vec<(VehicleType, Color)> = VehicleType::ALL
        .iter()
        .flat_map(|&t| Color::ALL.iter().map(move |&c| (t, c)))
        .collect();
    descriptors.shuffle(rng);
    let eois: Vec<EoiDescriptor> = descriptors[..n_eois]
        .iter()
        .enumerate()
        .map(|(i, &(vehicle_type, color))| EoiDescriptor {
            id: format!("E{}", i + 1),
            vehicle_type,
            color,
        })
        .collect();

    // Priors: Dirichlet over AOIs plus the residual.
    let aoi_gamma = Gamma::new(cfg.prior_concentration, 1.0).map_err(|e| e.to_string())?;
    let res_gamma = Gamma::new(cfg.residual_concentration, 1.0).map_err(|e| e.to_string())?;
    for e in &eois {
        let draws: Vec<f64> = (0..n_aois).map(|_| aoi_gamma.sample(rng)).collect();
        let residual = res_gamma.sample(rng);
        let total = draws.iter().sum::<f64>() + residual;
        for (a, g) in d.aois.iter_mut().zip(&draws) {
            let p = floor4(g / total);
            if p > 0.0 {
                a.priors.push((e.id.clone(), p));
            }
        }
    }

    // EOI entities: the containing AOI is drawn in proportion to the priors.
    for (k, e) in eois.iter().enumerate() {
        let weights: Vec<f64> = d.aois.iter().map(|a| a.prior(&e.id)).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(format!("{} has no AOI with positive prior", e.id));
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 && u < *w {
                chosen = i;
                break;
            }
            u -= w;
        }
        while weights[chosen] <= 0.0 {
            chosen -= 1;
        }
        let poly = d.aois[chosen].boundary.clone();
        let bb = poly.bbox();
        let mut spot = None;
        for _ in 0..PLACEMENT_TRIES {
            let p = Point2::new(
                uniform(rng, bb.min.x, bb.max.x),
                uniform(rng, bb.min.y, bb.max.y),
            );
            if poly.distance_to_boundary(p) > 2.0 && poly.contains(p) && d.free_spot(cfg, p) {
                spot = Some(p);
                break;
            }
        }
        let p =
            spot.ok_or_else(|| format!("no free spot for {} in {}", e.id, d.aois[chosen].id))?;
        d.entities.push(GroundTruthEntity {
            id: format!("car{}", k + 1),
            position: p.with_z(0.0),
            vehicle_type: e.vehicle_type,
            color: e.color,
            is_eoi: true,
            eoi_id: Some(e.id.clone()),
        });
    }

    // Distractors: exact copies only outside AOIs, partial matches anywhere.
    let n_distractors = count(rng, cfg.n_distractors);
    for k in 0..n_distractors {
        let target = &eois[rng.random_range(0..eois.len())];
        let exact = rng.random::<f64>() < cfg.exact_distractor_prob;
        let (vt, col) = if exact {
            (target.vehicle_type, target.color)
        } else if rng.random::<bool>() {
            let others: Vec<Color> = Color::ALL
                .into_iter()
                .filter(|&c| c != target.color)
                .collect();
            (
                target.vehicle_type,
                others[rng.random_range(0..others.len())],
            )
        } else {
            let other = VehicleType::ALL
                .into_iter()
                .find(|&t| t != target.vehicle_type)
                .unwrap_or(target.vehicle_type);
            (other, target.color)
        };
        let matches_some_eoi = eois.iter().any(|e| (e.vehicle_type, e.color) == (vt, col));
        let mut spot = None;
        for _ in 0..PLACEMENT_TRIES {
            // partial matches prefer AOIs, where they actually challenge perception
            let p = if !matches_some_eoi && rng.random::<f64>() < 0.6 {
                let a = &d.aois[rng.random_range(0..d.aois.len())].boundary;
                let bb = a.bbox();
                Point2::new(
                    uniform(rng, bb.min.x, bb.max.x),
                    uniform(rng, bb.min.y, bb.max.y),
                )
            } else {
                Point2::new(uniform(rng, 0.0, size), uniform(rng, 0.0, size))
            };
            if matches_some_eoi
                && d.aois
                    .iter()
                    .any(|a| a.boundary.distance_to_boundary(p) < 2.0 || a.boundary.contains(p))
            {
                continue;
            }
            if d.free_spot(cfg, p) {
                spot = Some(p);
                break;
            }
        }
        let Some(p) = spot else { continue };
        d.entities.push(GroundTruthEntity {
            id: format!("car{}", n_eois + k + 1),
            position: p.with_z(0.0),
            vehicle_type: vt,
            color: col,
            is_eoi: false,
            eoi_id: None,
        });
    }

    Ok(Scenario {
        map_extent: extent,
        aois: d.aois,
        kozs: d.kozs,
        eois,
        entities: d.entities,
        occupancy: d.grid,
        occupancy_source: OccupancySource::Boxes(d.boxes),
        time_budget: cfg.time_budget,
        uav_start: Pose::new(start.with_z(cfg.altitude), 0.0, 0.0),
        seed,
        sensor: None,
    })
}

fn overlap_area(a: &Rect, b: &Rect) -> f64 {
    let w = (a.max.x.min(b.max.x) - a.min.x.max(b.min.x)).max(0.0);
    let h = (a.max.y.min(b.max.y) - a.min.y.max(b.min.y)).max(0.0);
    w * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mission::{parse_scenario, write_scenario};

    #[test]
    fn same_seed_same_bytes() {
        let cfg = GeneratorConfig::default();
        let a = write_scenario(&generate_scenario(7, &cfg).unwrap());
        let b = write_scenario(&generate_scenario(7, &cfg).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, write_scenario(&generate_scenario(8, &cfg).unwrap()));
    }

    #[test]
    fn seed_sweep_always_validates() {
        let cfg = GeneratorConfig::default();
        for seed in 0..100 {
            let s = generate_scenario(seed, &cfg).unwrap();
            assert!(validate_scenario(&s).is_empty(), "seed {seed}");
            assert!((2..=6).contains(&s.aois.len()) && (1..=4).contains(&s.eois.len()));
        }
    }

    #[test]
    fn no_kozs_means_straight_lines_are_koz_feasible() {
        let cfg = GeneratorConfig {
            n_kozs: (0, 0),
            ..Default::default()
        };
        let s = generate_scenario(3, &cfg).unwrap();
        assert!(s.kozs.is_empty());
        let a = s.uav_start.position.xy();
        for aoi in &s.aois {
            let b = aoi.boundary.centroid();
            assert!(s
                .koz_polygons()
                .iter()
                .all(|k| !k.segment_enters_interior(a, b)));
        }
    }

    #[test]
    fn generated_text_round_trips() {
        let s = generate_scenario(11, &GeneratorConfig::default()).unwrap();
        let back = parse_scenario(&write_scenario(&s), None, "gen").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn impossible_layout_is_an_explicit_error() {
        let cfg = GeneratorConfig {
            n_aois: (6, 6),
            aoi_size: (240.0, 240.0),
            max_attempts: 3,
            ..Default::default()
        };
        assert!(matches!(
            generate_scenario(1, &cfg),
            Err(Error::Generation(_))
        ));
    }
}
