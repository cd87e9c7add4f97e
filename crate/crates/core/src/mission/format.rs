//! Line-oriented scenario file format.
//!
//! ```text
//! version = 1
//! [map]
//! extent = 0, 0, 500, 500
//! time_budget = 5min
//! uav_start = 20, 20, 40
//! [aoi north]
//! polygon = 100,300; 220,300; 220,400; 100,400
//! prior.E1 = 0.6
//! [eoi E1]
//! type = suv
//! color = red
//! [entity car1]
//! position = 150, 350, 0
//! type = suv
//! color = red
//! eoi = E1
//! [occupancy]
//! origin = 0, 0
//! cell_size = 5
//! dims = 100, 100, 12
//! box = 10, 10, 0, 30, 25, 15
//! ```
//!
//! Occupancy is given either inline (`cells = <hex>`, packed bits), as a list of
//! world-space `box` entries, or by reference to an `NSOG` binary (`file = ...`,
//! resolved relative to the scenario file).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3, Polygon2, Rect};
use crate::mission::{
    validate_scenario, Aoi, Color, EoiDescriptor, GroundTruthEntity, Koz, OccupancyGrid, Scenario,
    VehicleType, DEFAULT_TIME_BUDGET,
};
use crate::sensor::{uniform_confusion, NoiseMix, Pose, SensorModel, N_COLORS, N_TYPES};

pub const FORMAT_VERSION: u32 = 1;

const DEFAULT_CELL_SIZE: f64 = 5.0;
const DEFAULT_LAYERS: usize = 12;

/// Where the occupancy volume came from; controls how it is written back.
#[derive(Debug, Clone, PartialEq)]
pub enum OccupancySource {
    Inline,
    Boxes(Vec<[f64; 6]>),
    File(PathBuf),
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let s = parse_scenario(&text, path.parent(), &path.display().to_string())?;
    let violations = validate_scenario(&s);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(s)
}

#[derive(Default)]
struct Section {
    kind: String,
    id: String,
    line: usize,
    entries: Vec<(usize, String, String)>,
}

struct Ctx<'a> {
    name: &'a str,
}

impl Ctx<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.name.to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn num(&self, line: usize, v: &str) -> Result<f64> {
        let v = v.trim();
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.err(line, format!("expected a number, got '{v}'")))
    }

    /// Number with an optional unit suffix, normalised to meters / seconds / radians.
    fn quantity(&self, line: usize, v: &str) -> Result<f64> {
        let v = v.trim();
        let split = v
            .char_indices()
            .find(|(_, c)| c.is_ascii_alphabetic())
            .map_or(v.len(), |(i, _)| i);
        let (n, unit) = v.split_at(split);
        let x = self.num(line, n)?;
        let scale = match unit.trim() {
            "" | "m" | "s" | "rad" => 1.0,
            "km" => 1000.0,
            "ms" => 1e-3,
            "min" => 60.0,
            "h" => 3600.0,
            "deg" => std::f64::consts::PI / 180.0,
            u => return Err(self.err(line, format!("unknown unit '{u}'"))),
        };
        Ok(x * scale)
    }

    fn list(&self, line: usize, v: &str, n: usize) -> Result<Vec<f64>> {
        let xs = v
            .split(',')
            .map(|p| self.quantity(line, p))
            .collect::<Result<Vec<_>>>()?;
        if xs.len() != n {
            return Err(self.err(
                line,
                format!("expected {n} comma-separated values, got {}", xs.len()),
            ));
        }
        Ok(xs)
    }

    fn polygon(&self, line: usize, v: &str) -> Result<Polygon2> {
        let pts = v
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|p| self.list(line, p, 2).map(|xy| Point2::new(xy[0], xy[1])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Polygon2::new(pts))
    }

    fn bool(&self, line: usize, v: &str) -> Result<bool> {
        match v.trim() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(self.err(line, format!("expected a boolean, got '{other}'"))),
        }
    }

    fn matrix<const N: usize>(&self, line: usize, v: &str) -> Result<[[f64; N]; N]> {
        let rows: Vec<&str> = v.split(';').collect();
        if rows.len() != N {
            return Err(self.err(line, format!("expected {N} rows")));
        }
        let mut out = [[0.0; N]; N];
        for (i, r) in rows.iter().enumerate() {
            let xs = self.list(line, r, N)?;
            out[i].copy_from_slice(&xs);
        }
        Ok(out)
    }
}

fn split_sections(text: &str, ctx: &Ctx) -> Result<(Vec<(usize, String, String)>, Vec<Section>)> {
    let mut top = Vec::new();
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| ctx.err(ln, "unterminated section header"))?;
            let mut parts = inner.split_whitespace();
            let kind = parts
                .next()
                .ok_or_else(|| ctx.err(ln, "empty section header"))?
                .to_string();
            let id = parts.next().unwrap_or("").to_string();
            if parts.next().is_some() {
                return Err(ctx.err(ln, "section header takes at most one identifier"));
            }
            sections.push(Section {
                kind,
                id,
                line: ln,
                entries: Vec::new(),
            });
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ctx.err(ln, format!("expected 'key = value', got '{line}'")))?;
        let entry = (ln, k.trim().to_string(), v.trim().to_string());
        match sections.last_mut() {
            Some(s) => s.entries.push(entry),
            None => top.push(entry),
        }
    }
    Ok((top, sections))
}

fn parse_hex(ctx: &Ctx, line: usize, v: &str) -> Result<Vec<u8>> {
    let v = v.trim();
    if v.len() % 2 != 0 {
        return Err(ctx.err(line, "hex cell data has odd length"));
    }
    (0..v.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&v[i..i + 2], 16).map_err(|_| ctx.err(line, "invalid hex cell data"))
        })
        .collect()
}

/// Parses scenario text without validating it. `base_dir` resolves external grid files.
pub fn parse_scenario(text: &str, base_dir: Option<&Path>, name: &str) -> Result<Scenario> {
    let ctx = Ctx { name };
    let (top, sections) = split_sections(text, &ctx)?;
    for (ln, k, v) in &top {
        match k.as_str() {
            "version" => {
                let ver = ctx.num(*ln, v)?;
                if ver != FORMAT_VERSION as f64 {
                    return Err(ctx.err(*ln, format!("unsupported scenario format version {v}")));
                }
            }
            other => return Err(ctx.err(*ln, format!("unknown top-level key '{other}'"))),
        }
    }

    let mut extent = None;
    let mut time_budget = DEFAULT_TIME_BUDGET;
    let mut seed = 0u64;
    let mut uav_start = None;
    let mut uav_yaw = 0.0;
    let mut aois = Vec::new();
    let mut kozs = Vec::new();
    let mut eois = Vec::new();
    let mut entities = Vec::new();
    let mut occ_section = None;
    let mut sensor = None;

    for sec in &sections {
        let need_id = |s: &Section| -> Result<String> {
            if s.id.is_empty() {
                Err(ctx.err(s.line, format!("[{}] needs an identifier", s.kind)))
            } else {
                Ok(s.id.clone())
            }
        };
        match sec.kind.as_str() {
            "map" => {
                for (ln, k, v) in &sec.entries {
                    match k.as_str() {
                        "extent" => {
                            let xs = ctx.list(*ln, v, 4)?;
                            extent = Some(Rect::new(
                                Point2::new(xs[0], xs[1]),
                                Point2::new(xs[2], xs[3]),
                            ));
                        }
                        "time_budget" => time_budget = ctx.quantity(*ln, v)?,
                        "seed" => {
                            seed = v
                                .parse()
                                .map_err(|_| ctx.err(*ln, "seed must be an unsigned integer"))?
                        }
                        "uav_start" => {
                            let xs = ctx.list(*ln, v, 3)?;
                            uav_start = Some(Point3::new(xs[0], xs[1], xs[2]));
                        }
                        "uav_yaw" => uav_yaw = ctx.quantity(*ln, v)?,
                        other => return Err(ctx.err(*ln, format!("unknown [map] key '{other}'"))),
                    }
                }
            }
            "aoi" => {
                let id = need_id(sec)?;
                let mut boundary = None;
                let mut priors = Vec::new();
                for (ln, k, v) in &sec.entries {
                    if k == "polygon" {
                        boundary = Some(ctx.polygon(*ln, v)?);
                    } else if let Some(e) = k.strip_prefix("prior.") {
                        priors.push((e.to_string(), ctx.num(*ln, v)?));
                    } else {
                        return Err(ctx.err(*ln, format!("unknown [aoi] key '{k}'")));
                    }
                }
                let boundary = boundary
                    .ok_or_else(|| ctx.err(sec.line, format!("aoi {id} has no polygon")))?;
                aois.push(Aoi {
                    id,
                    boundary,
                    priors,
                });
            }
            "koz" => {
                let id = need_id(sec)?;
                let mut boundary = None;
                for (ln, k, v) in &sec.entries {
                    match k.as_str() {
                        "polygon" => boundary = Some(ctx.polygon(*ln, v)?),
                        other => return Err(ctx.err(*ln, format!("unknown [koz] key '{other}'"))),
                    }
                }
                let boundary = boundary
                    .ok_or_else(|| ctx.err(sec.line, format!("koz {id} has no polygon")))?;
                kozs.push(Koz { id, boundary });
            }
            "eoi" => {
                let id = need_id(sec)?;
                let (mut vt, mut col) = (None, None);
                for (ln, k, v) in &sec.entries {
                    match k.as_str() {
                        "type" => {
                            vt = Some(VehicleType::parse(v).ok_or_else(|| {
                                ctx.err(*ln, format!("unknown vehicle type '{v}'"))
                            })?)
                        }
                        "color" => {
                            col = Some(
                                Color::parse(v)
                                    .ok_or_else(|| ctx.err(*ln, format!("unknown color '{v}'")))?,
                            )
                        }
                        other => return Err(ctx.err(*ln, format!("unknown [eoi] key '{other}'"))),
                    }
                }
                eois.push(EoiDescriptor {
                    id: id.clone(),
                    vehicle_type: vt
                        .ok_or_else(|| ctx.err(sec.line, format!("eoi {id} has no type")))?,
                    color: col
                        .ok_or_else(|| ctx.err(sec.line, format!("eoi {id} has no color")))?,
                });
            }
            "entity" => {
                let id = need_id(sec)?;
                let (mut pos, mut vt, mut col, mut eoi, mut is_eoi) =
                    (None, None, None, None, None);
                for (ln, k, v) in &sec.entries {
                    match k.as_str() {
                        "position" => {
                            let xs = ctx.list(*ln, v, 3)?;
                            pos = Some(Point3::new(xs[0], xs[1], xs[2]));
                        }
                        "type" => {
                            vt = Some(VehicleType::parse(v).ok_or_else(|| {
                                ctx.err(*ln, format!("unknown vehicle type '{v}'"))
                            })?)
                        }
                        "color" => {
                            col = Some(
                                Color::parse(v)
                                    .ok_or_else(|| ctx.err(*ln, format!("unknown color '{v}'")))?,
                            )
                        }
                        "eoi" => eoi = Some(v.clone()),
                        "is_eoi" => is_eoi = Some(ctx.bool(*ln, v)?),
                        other => {
                            return Err(ctx.err(*ln, format!("unknown [entity] key '{other}'")))
                        }
                    }
                }
                entities.push(GroundTruthEntity {
                    id: id.clone(),
                    position: pos
                        .ok_or_else(|| ctx.err(sec.line, format!("entity {id} has no position")))?,
                    vehicle_type: vt
                        .ok_or_else(|| ctx.err(sec.line, format!("entity {id} has no type")))?,
                    color: col
                        .ok_or_else(|| ctx.err(sec.line, format!("entity {id} has no color")))?,
                    is_eoi: is_eoi.unwrap_or(eoi.is_some()),
                    eoi_id: eoi,
                });
            }
            "occupancy" => occ_section = Some(sec),
            "sensor" => sensor = Some(parse_sensor(&ctx, sec)?),
            other => return Err(ctx.err(sec.line, format!("unknown section [{other}]"))),
        }
    }

    let extent = extent.ok_or_else(|| ctx.err(1, "missing [map] extent"))?;
    let uav_start = uav_start.ok_or_else(|| ctx.err(1, "missing [map] uav_start"))?;
    let (occupancy, occupancy_source) = match occ_section {
        Some(sec) => parse_occupancy(&ctx, sec, base_dir)?,
        None => {
            let dims = [
                (extent.width() / DEFAULT_CELL_SIZE).ceil().max(1.0) as usize,
                (extent.height() / DEFAULT_CELL_SIZE).ceil().max(1.0) as usize,
                DEFAULT_LAYERS,
            ];
            (
                OccupancyGrid::empty(extent.min, DEFAULT_CELL_SIZE, dims),
                OccupancySource::Inline,
            )
        }
    };

    Ok(Scenario {
        map_extent: extent,
        aois,
        kozs,
        eois,
        entities,
        occupancy,
        occupancy_source,
        time_budget,
        uav_start: Pose::new(uav_start, uav_yaw, 0.0),
        seed,
        sensor,
    })
}

fn parse_occupancy(
    ctx: &Ctx,
    sec: &Section,
    base_dir: Option<&Path>,
) -> Result<(OccupancyGrid, OccupancySource)> {
    let (mut origin, mut cell, mut dims) = (None, None, None);
    let mut boxes = Vec::new();
    let mut cells_hex = None;
    let mut file = None;
    for (ln, k, v) in &sec.entries {
        match k.as_str() {
            "origin" => {
                let xs = ctx.list(*ln, v, 2)?;
                origin = Some(Point2::new(xs[0], xs[1]));
            }
            "cell_size" => cell = Some(ctx.quantity(*ln, v)?),
            "dims" => {
                let xs = ctx.list(*ln, v, 3)?;
                if xs.iter().any(|x| *x < 0.0 || x.fract() != 0.0) {
                    return Err(ctx.err(*ln, "dims must be nonnegative integers"));
                }
                dims = Some([xs[0] as usize, xs[1] as usize, xs[2] as usize]);
            }
            "box" => {
                let xs = ctx.list(*ln, v, 6)?;
                boxes.push([xs[0], xs[1], xs[2], xs[3], xs[4], xs[5]]);
            }
            "cells" => cells_hex = Some((*ln, v.clone())),
            "file" => file = Some((*ln, v.clone())),
            other => return Err(ctx.err(*ln, format!("unknown [occupancy] key '{other}'"))),
        }
    }
    let origin = origin.ok_or_else(|| ctx.err(sec.line, "occupancy needs origin"))?;
    let cell = cell.ok_or_else(|| ctx.err(sec.line, "occupancy needs cell_size"))?;
    if !(cell > 0.0) {
        return Err(ctx.err(sec.line, "cell_size must be positive"));
    }

    if let Some((ln, f)) = file {
        let path = match base_dir {
            Some(d) => d.join(&f),
            None => PathBuf::from(&f),
        };
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let grid = OccupancyGrid::from_nsog(&bytes, origin, cell)
            .map_err(|e| ctx.err(ln, format!("{}: {e}", path.display())))?;
        if let Some(d) = dims {
            if d != grid.dims() {
                return Err(ctx.err(
                    ln,
                    format!("dims {:?} disagree with grid file {:?}", d, grid.dims()),
                ));
            }
        }
        return Ok((grid, OccupancySource::File(PathBuf::from(f))));
    }

    let dims = dims.ok_or_else(|| ctx.err(sec.line, "occupancy needs dims"))?;
    if let Some((ln, hex)) = cells_hex {
        let bytes = parse_hex(ctx, ln, &hex)?;
        let n = dims[0] * dims[1] * dims[2];
        let cells =
            OccupancyGrid::unpack_bits(&bytes, n).map_err(|e| ctx.err(ln, e.to_string()))?;
        let grid = OccupancyGrid::from_cells(origin, cell, dims, cells)
            .map_err(|e| ctx.err(ln, e.to_string()))?;
        return Ok((grid, OccupancySource::Inline));
    }
    let mut grid = OccupancyGrid::empty(origin, cell, dims);
    for b in &boxes {
        grid.fill_box(Point3::new(b[0], b[1], b[2]), Point3::new(b[3], b[4], b[5]));
    }
    let source = if boxes.is_empty() {
        OccupancySource::Inline
    } else {
        OccupancySource::Boxes(boxes)
    };
    Ok((grid, source))
}

fn parse_sensor(ctx: &Ctx, sec: &Section) -> Result<SensorModel> {
    let mut m = SensorModel::clear();
    // the preset applies first regardless of where it appears in the section
    if let Some((ln, _, v)) = sec.entries.iter().find(|(_, k, _)| k == "preset") {
        m = SensorModel::preset(v).map_err(|e| ctx.err(*ln, e.to_string()))?;
    }
    let mut mix_sigma = m.noise_mix.map(|x| x.sigma);
    let mut mix_prob = m.noise_mix.map(|x| x.prob);
    for (ln, k, v) in &sec.entries {
        let ln = *ln;
        match k.as_str() {
            "preset" => {}
            "max_range" => m.max_range = ctx.quantity(ln, v)?,
            "fov_half_angle" => m.fov_half_angle = ctx.quantity(ln, v)?,
            "p_detect" => m.p_detect = ctx.num(ln, v)?,
            "position_noise_sigma" => m.position_noise_sigma = ctx.quantity(ln, v)?,
            "range_scaled_noise" => m.range_scaled_noise = ctx.bool(ln, v)?,
            "noise_mix_sigma" => mix_sigma = Some(ctx.quantity(ln, v)?),
            "noise_mix_prob" => mix_prob = Some(ctx.num(ln, v)?),
            "color_accuracy" => m.color_confusion = uniform_confusion::<N_COLORS>(ctx.num(ln, v)?),
            "type_accuracy" => m.type_confusion = uniform_confusion::<N_TYPES>(ctx.num(ln, v)?),
            "color_confusion" => m.color_confusion = ctx.matrix::<N_COLORS>(ln, v)?,
            "type_confusion" => m.type_confusion = ctx.matrix::<N_TYPES>(ln, v)?,
            "attribute_noise" => m.attribute_noise = ctx.num(ln, v)?,
            "false_positive_rate" => m.false_positive_rate = ctx.num(ln, v)?,
            "frame_period" => m.frame_period = ctx.quantity(ln, v)?,
            other => return Err(ctx.err(ln, format!("unknown [sensor] key '{other}'"))),
        }
    }
    m.noise_mix = match (mix_sigma, mix_prob) {
        (Some(sigma), Some(prob)) => Some(NoiseMix { sigma, prob }),
        (None, None) => None,
        _ => {
            return Err(ctx.err(
                sec.line,
                "noise_mix_sigma and noise_mix_prob must be given together",
            ))
        }
    };
    m.check().map_err(|e| ctx.err(sec.line, e.to_string()))?;
    Ok(m)
}

fn fmt_point2(p: Point2) -> String {
    format!("{}, {}", p.x, p.y)
}

fn fmt_polygon(p: &Polygon2) -> String {
    p.vertices
        .iter()
        .map(|v| format!("{},{}", v.x, v.y))
        .collect::<Vec<_>>()
        .join("; ")
}

fn fmt_row(r: &[f64]) -> String {
    r.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Canonical text form. Parsing the output yields an equal scenario.
pub fn write_scenario(s: &Scenario) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "version = {FORMAT_VERSION}");
    let _ = writeln!(o, "\n[map]");
    let e = s.map_extent;
    let _ = writeln!(
        o,
        "extent = {}, {}, {}, {}",
        e.min.x, e.min.y, e.max.x, e.max.y
    );
    let _ = writeln!(o, "time_budget = {}", s.time_budget);
    let _ = writeln!(o, "seed = {}", s.seed);
    let p = s.uav_start.position;
    let _ = writeln!(o, "uav_start = {}, {}, {}", p.x, p.y, p.z);
    if s.uav_start.yaw != 0.0 {
        let _ = writeln!(o, "uav_yaw = {}", s.uav_start.yaw);
    }
    for a in &s.aois {
        let _ = writeln!(o, "\n[aoi {}]", a.id);
        let _ = writeln!(o, "polygon = {}", fmt_polygon(&a.boundary));
        for (eoi, pr) in &a.priors {
            let _ = writeln!(o, "prior.{eoi} = {pr}");
        }
    }
    for k in &s.kozs {
        let _ = writeln!(o, "\n[koz {}]", k.id);
        let _ = writeln!(o, "polygon = {}", fmt_polygon(&k.boundary));
    }
    for d in &s.eois {
        let _ = writeln!(o, "\n[eoi {}]", d.id);
        let _ = writeln!(o, "type = {}", d.vehicle_type.name());
        let _ = writeln!(o, "color = {}", d.color.name());
    }
    for ent in &s.entities {
        let _ = writeln!(o, "\n[entity {}]", ent.id);
        let q = ent.position;
        let _ = writeln!(o, "position = {}, {}, {}", q.x, q.y, q.z);
        let _ = writeln!(o, "type = {}", ent.vehicle_type.name());
        let _ = writeln!(o, "color = {}", ent.color.name());
        match &ent.eoi_id {
            Some(id) => {
                let _ = writeln!(o, "eoi = {id}");
                if !ent.is_eoi {
                    let _ = writeln!(o, "is_eoi = false");
                }
            }
            None if ent.is_eoi => {
                let _ = writeln!(o, "is_eoi = true");
            }
            None => {}
        }
    }
    let g = &s.occupancy;
    let _ = writeln!(o, "\n[occupancy]");
    let _ = writeln!(o, "origin = {}", fmt_point2(g.origin()));
    let _ = writeln!(o, "cell_size = {}", g.cell_size());
    let d = g.dims();
    let _ = writeln!(o, "dims = {}, {}, {}", d[0], d[1], d[2]);
    match &s.occupancy_source {
        OccupancySource::File(f) => {
            let _ = writeln!(o, "file = {}", f.display());
        }
        OccupancySource::Boxes(boxes) => {
            for b in boxes {
                let _ = writeln!(o, "box = {}", fmt_row(b).replace(',', ", "));
            }
        }
        OccupancySource::Inline => {
            if g.cells().iter().any(|&c| c) {
                let hex: String = g.packed_bits().iter().map(|b| format!("{b:02x}")).collect();
                let _ = writeln!(o, "cells = {hex}");
            }
        }
    }
    if let Some(m) = &s.sensor {
        let _ = writeln!(o, "\n[sensor]");
        let _ = writeln!(o, "max_range = {}", m.max_range);
        let _ = writeln!(o, "fov_half_angle = {}", m.fov_half_angle);
        let _ = writeln!(o, "p_detect = {}", m.p_detect);
        let _ = writeln!(o, "position_noise_sigma = {}", m.position_noise_sigma);
        let _ = writeln!(o, "range_scaled_noise = {}", m.range_scaled_noise);
        if let Some(mix) = m.noise_mix {
            let _ = writeln!(o, "noise_mix_sigma = {}", mix.sigma);
            let _ = writeln!(o, "noise_mix_prob = {}", mix.prob);
        }
        let rows = |m: &[&[f64]]| m.iter().map(|r| fmt_row(r)).collect::<Vec<_>>().join("; ");
        let cc: Vec<&[f64]> = m.color_confusion.iter().map(|r| r.as_slice()).collect();
        let tc: Vec<&[f64]> = m.type_confusion.iter().map(|r| r.as_slice()).collect();
        let _ = writeln!(o, "color_confusion = {}", rows(&cc));
        let _ = writeln!(o, "type_confusion = {}", rows(&tc));
        let _ = writeln!(o, "attribute_noise = {}", m.attribute_noise);
        let _ = writeln!(o, "false_positive_rate = {}", m.false_positive_rate);
        let _ = writeln!(o, "frame_period = {}", m.frame_period);
    }
    o
}
