//! Synthetic perception: turns a UAV pose plus scenario ground truth into the
//! noisy per-frame detections the world model consumes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3};
use crate::mission::Scenario;

/// The simulation's random source. ChaCha keeps streams identical across platforms.
pub type SimRng = ChaCha8Rng;

pub const N_COLORS: usize = 8;
pub const N_TYPES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point3,
    pub yaw: f64,
    pub timestamp: f64,
}

impl Pose {
    pub fn new(position: Point3, yaw: f64, timestamp: f64) -> Self {
        Self {
            position,
            yaw,
            timestamp,
        }
    }
}

/// Alternative per-frame noise level, drawn with probability `prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseMix {
    pub sigma: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub max_range: f64,
    /// Half-angle of the downward-looking cone, radians.
    pub fov_half_angle: f64,
    pub p_detect: f64,
    pub position_noise_sigma: f64,
    /// Scales sigma by `1 + range / max_range`.
    pub range_scaled_noise: bool,
    pub noise_mix: Option<NoiseMix>,
    pub color_confusion: [[f64; N_COLORS]; N_COLORS],
    pub type_confusion: [[f64; N_TYPES]; N_TYPES],
    /// Log-normal jitter applied to likelihood entries before renormalising.
    pub attribute_noise: f64,
    /// Expected spurious detections per frame.
    pub false_positive_rate: f64,
    pub frame_period: f64,
}

pub const PRESETS: [&str; 4] = ["clear", "night", "fog", "perfect"];

/// Confusion matrix with `accuracy` on the diagonal and the rest spread evenly.
pub fn uniform_confusion<const N: usize>(accuracy: f64) -> [[f64; N]; N] {
    let off = (1.0 - accuracy) / (N as f64 - 1.0);
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { accuracy } else { off }))
}

impl SensorModel {
    pub fn perfect() -> Self {
        Self {
            max_range: 60.0,
            fov_half_angle: 0.5f64.atan(),
            p_detect: 1.0,
            position_noise_sigma: 0.0,
            range_scaled_noise: false,
            noise_mix: None,
            color_confusion: uniform_confusion(1.0),
            type_confusion: uniform_confusion(1.0),
            attribute_noise: 0.0,
            false_positive_rate: 0.0,
            frame_period: 0.5,
        }
    }

    pub fn clear() -> Self {
        Self {
            p_detect: 0.9,
            position_noise_sigma: 1.5,
            color_confusion: uniform_confusion(0.9),
            type_confusion: uniform_confusion(0.95),
            attribute_noise: 0.3,
            false_positive_rate: 0.05,
            ..Self::perfect()
        }
    }

    pub fn night() -> Self {
        Self {
            p_detect: 0.75,
            position_noise_sigma: 2.5,
            color_confusion: uniform_confusion(0.75),
            type_confusion: uniform_confusion(0.9),
            attribute_noise: 0.5,
            false_positive_rate: 0.1,
            ..Self::perfect()
        }
    }

    pub fn fog() -> Self {
        Self {
            max_range: 48.0,
            p_detect: 0.6,
            position_noise_sigma: 3.0,
            range_scaled_noise: true,
            color_confusion: uniform_confusion(0.65),
            type_confusion: uniform_confusion(0.8),
            attribute_noise: 0.5,
            false_positive_rate: 0.15,
            ..Self::perfect()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "clear" => Ok(Self::clear()),
            "night" => Ok(Self::night()),
            "fog" => Ok(Self::fog()),
            "perfect" => Ok(Self::perfect()),
            other => Err(Error::Config(format!(
                "unknown sensor preset '{other}' (expected one of {PRESETS:?})"
            ))),
        }
    }

    /// Checks the model's own invariants.
    pub fn check(&self) -> Result<()> {
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        let row_ok =
            |r: &[f64]| r.iter().all(|&x| x >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        if !prob(self.p_detect) {
            return Err(Error::Config(format!(
                "p_detect {} outside [0,1]",
                self.p_detect
            )));
        }
        if !(self.position_noise_sigma >= 0.0)
            || self
                .noise_mix
                .is_some_and(|m| !(m.sigma >= 0.0) || !prob(m.prob))
        {
            return Err(Error::Config(
                "noise sigma must be >= 0 and mix probability in [0,1]".into(),
            ));
        }
        if !self.color_confusion.iter().all(|r| row_ok(r))
            || !self.type_confusion.iter().all(|r| row_ok(r))
        {
            return Err(Error::Config(
                "confusion matrix rows must be nonnegative and sum to 1".into(),
            ));
        }
        if !(self.max_range > 0.0 && self.frame_period > 0.0 && self.false_positive_rate >= 0.0) {
            return Err(Error::Config(
                "max_range and frame_period must be positive, fp rate nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Ground radius of the sensing cone from `altitude`.
    pub fn footprint_radius(&self, altitude: f64) -> f64 {
        let cone = altitude * self.fov_half_angle.tan();
        let range = (self.max_range * self.max_range - altitude * altitude)
            .max(0.0)
            .sqrt();
        cone.min(range)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_id: u64,
    pub measured_position: Point3,
    pub position_sigma: f64,
    pub color_likelihood: [f64; N_COLORS],
    pub type_likelihood: [f64; N_TYPES],
    pub confidence: f64,
    /// Simulator bookkeeping only; the world model never reads this.
    pub source_entity: Option<String>,
}

/// Smallest sigma reported with a detection; keeps the measurement variance positive.
pub const MIN_REPORTED_SIGMA: f64 = 1e-3;

/// Indices (into `s.entities`) of entities inside range and the view cone with a
/// clear line of sight through the occupancy grid.
pub fn visible_entities(pose: &Pose, s: &Scenario, m: &SensorModel) -> Vec<usize> {
    let eye = pose.position;
    let cos_fov = m.fov_half_angle.cos();
    s.entities
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            let p = e.position;
            let r = eye.dist(p);
            if r > m.max_range {
                return false;
            }
            if r > 0.0 && (eye.z - p.z) / r < cos_fov - 1e-12 {
                return false;
            }
            s.occupancy.segment_clear(eye, p)
        })
        .map(|(i, _)| i)
        .collect()
}

fn perturb<const N: usize>(row: &[f64; N], noise: f64, rng: &mut SimRng) -> [f64; N] {
    let mut out = *row;
    if noise > 0.0 {
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v *= (noise * z).exp();
        }
    }
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        out.iter_mut().for_each(|v| *v /= s);
    } else {
        out = [1.0 / N as f64; N];
    }
    out
}

fn dirichlet_ones<const N: usize>(rng: &mut SimRng) -> [f64; N] {
    let mut out = [0.0; N];
    for v in out.iter_mut() {
        *v = Exp1.sample(rng);
    }
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

fn argmax_value(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn gaussian(rng: &mut SimRng, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

/// One frame of synthetic perception. Deterministic in (`pose`, scenario, model, rng state).
pub fn sense(
    pose: &Pose,
    s: &Scenario,
    m: &SensorModel,
    frame_id: u64,
    rng: &mut SimRng,
) -> Vec<Detection> {
    let mut out = Vec::new();
    for idx in visible_entities(pose, s, m) {
        if rng.random::<f64>() >= m.p_detect {
            continue;
        }
        let ent = &s.entities[idx];
        let range = pose.position.dist(ent.position);
        let mut sigma = m.position_noise_sigma;
        if let Some(mix) = m.noise_mix {
            if rng.random::<f64>() < mix.prob {
                sigma = mix.sigma;
            }
        }
        if m.range_scaled_noise {
            sigma *= 1.0 + range / m.max_range;
        }
        let p = ent.position;
        let measured = Point3::new(
            p.x + gaussian(rng, sigma),
            p.y + gaussian(rng, sigma),
            p.z + gaussian(rng, sigma),
        );
        let color = perturb(
            &m.color_confusion[ent.color.index()],
            m.attribute_noise,
            rng,
        );
        let vtype = perturb(
            &m.type_confusion[ent.vehicle_type.index()],
            m.attribute_noise,
            rng,
        );
        out.push(Detection {
            frame_id,
            measured_position: measured,
            position_sigma: sigma.max(MIN_REPORTED_SIGMA),
            confidence: argmax_value(&color) * argmax_value(&vtype),
            color_likelihood: color,
            type_likelihood: vtype,
            source_entity: Some(ent.id.clone()),
        });
    }

    if m.false_positive_rate > 0.0 {
        let n = Poisson::new(m.false_positive_rate)
            .expect("positive rate")
            .sample(rng) as usize;
        let radius = m.footprint_radius(pose.position.z);
        let centre = pose.position.xy();
        for _ in 0..n {
            // a few attempts to land on free ground inside the map
            let mut spot = None;
            for _ in 0..8 {
                let r = radius * rng.random::<f64>().sqrt();
                let th = std::f64::consts::TAU * rng.random::<f64>();
                let q = Point2::new(centre.x + r * th.cos(), centre.y + r * th.sin());
                if s.map_extent.contains(q) && s.occupancy.ground_height(q) == 0.0 {
                    spot = Some(q);
                    break;
                }
            }
            let Some(q) = spot else { continue };
            let color: [f64; N_COLORS] = dirichlet_ones(rng);
            let vtype: [f64; N_TYPES] = dirichlet_ones(rng);
            out.push(Detection {
                frame_id,
                measured_position: q.with_z(0.0),
                position_sigma: m.position_noise_sigma.max(MIN_REPORTED_SIGMA),
                confidence: argmax_value(&color) * argmax_value(&vtype),
                color_likelihood: color,
                type_likelihood: vtype,
                source_entity: None,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mission::tests::small_scenario;
    use rand::SeedableRng;

    fn pose_over(x: f64, y: f64, z: f64) -> Pose {
        Pose::new(Point3::new(x, y, z), 0.0, 0.0)
    }

    #[test]
    fn entity_directly_below_is_visible_until_occluded() {
        let mut s = small_scenario();
        let m = SensorModel {
            max_range: 50.0,
            ..SensorModel::perfect()
        };
        let pose = pose_over(50.0, 50.0, 20.0);
        assert_eq!(visible_entities(&pose, &s, &m), vec![0]);
        // voxel on the ray midpoint (z = 10 m)
        let idx = s
            .occupancy
            .world_to_index(Point3::new(50.0, 50.0, 10.0))
            .unwrap();
        s.occupancy.set(idx, true);
        assert!(visible_entities(&pose, &s, &m).is_empty());
    }

    #[test]
    fn range_and_cone_limits() {
        let s = small_scenario();
        let m = SensorModel::perfect();
        assert!(visible_entities(&pose_over(50.0, 50.0, 70.0), &s, &m).is_empty());
        // 25 m sideways at 40 m altitude is outside a 26.6 degree cone
        assert!(visible_entities(&pose_over(75.0, 50.0, 40.0), &s, &m).is_empty());
        assert_eq!(
            visible_entities(&pose_over(65.0, 50.0, 40.0), &s, &m),
            vec![0]
        );
    }

    #[test]
    fn noiseless_limit_reproduces_ground_truth() {
        let s = small_scenario();
        let m = SensorModel::perfect();
        let mut rng = SimRng::seed_from_u64(3);
        let d = sense(&pose_over(50.0, 50.0, 40.0), &s, &m, 7, &mut rng);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].measured_position, s.entities[0].position);
        assert_eq!(
            d[0].color_likelihood[crate::mission::Color::Red.index()],
            1.0
        );
        assert_eq!(d[0].color_likelihood.iter().sum::<f64>(), 1.0);
        assert_eq!(
            d[0].type_likelihood[crate::mission::VehicleType::Suv.index()],
            1.0
        );
        assert_eq!(d[0].frame_id, 7);
    }

    #[test]
    fn zero_detection_probability_is_silent() {
        let s = small_scenario();
        let m = SensorModel {
            p_detect: 0.0,
            ..SensorModel::perfect()
        };
        let mut rng = SimRng::seed_from_u64(3);
        for _ in 0..50 {
            assert!(sense(&pose_over(50.0, 50.0, 40.0), &s, &m, 0, &mut rng).is_empty());
        }
    }

    #[test]
    fn presets_satisfy_invariants() {
        for p in PRESETS {
            SensorModel::preset(p).unwrap().check().unwrap();
        }
        assert!(SensorModel::preset("rain").is_err());
    }

    #[test]
    fn likelihoods_stay_normalized_under_noise() {
        let s = small_scenario();
        let m = SensorModel {
            p_detect: 1.0,
            false_positive_rate: 2.0,
            ..SensorModel::night()
        };
        let mut rng = SimRng::seed_from_u64(11);
        for f in 0..200 {
            for d in sense(&pose_over(50.0, 50.0, 40.0), &s, &m, f, &mut rng) {
                assert!((d.color_likelihood.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!((d.type_likelihood.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(d.position_sigma > 0.0);
            }
        }
    }
}
