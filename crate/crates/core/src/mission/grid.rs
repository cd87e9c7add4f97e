//! Voxel occupancy grid and its packed binary (`NSOG`) encoding.

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3, Rect};

pub const NSOG_MAGIC: &[u8; 4] = b"NSOG";
pub const NSOG_VERSION: u8 = 1;

/// Dense boolean voxel volume. Voxels are cubes of side `cell_size`; the
/// vertical axis starts at z = 0 (ground level). Linear index is
/// `x + nx * (y + ny * z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    origin: Point2,
    cell_size: f64,
    dims: [usize; 3],
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn empty(origin: Point2, cell_size: f64, dims: [usize; 3]) -> Self {
        Self {
            origin,
            cell_size,
            dims,
            cells: vec![false; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_cells(
        origin: Point2,
        cell_size: f64,
        dims: [usize; 3],
        cells: Vec<bool>,
    ) -> Result<Self> {
        if !(cell_size > 0.0) {
            return Err(Error::GridFormat(format!(
                "cell_size must be positive, got {cell_size}"
            )));
        }
        if cells.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::GridFormat(format!(
                "expected {} cells for dims {:?}, got {}",
                dims[0] * dims[1] * dims[2],
                dims,
                cells.len()
            )));
        }
        Ok(Self {
            origin,
            cell_size,
            dims,
            cells,
        })
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn extent(&self) -> Rect {
        Rect::new(
            self.origin,
            Point2::new(
                self.origin.x + self.dims[0] as f64 * self.cell_size,
                self.origin.y + self.dims[1] as f64 * self.cell_size,
            ),
        )
    }

    pub fn height(&self) -> f64 {
        self.dims[2] as f64 * self.cell_size
    }

    fn linear(&self, [x, y, z]: [usize; 3]) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn get(&self, idx: [usize; 3]) -> bool {
        self.cells[self.linear(idx)]
    }

    pub fn set(&mut self, idx: [usize; 3], v: bool) {
        let i = self.linear(idx);
        self.cells[i] = v;
    }

    /// Voxel containing `p`, or `None` outside the volume.
    pub fn world_to_index(&self, p: Point3) -> Option<[usize; 3]> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size).floor();
        let fz = (p.z / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || fz < 0.0 {
            return None;
        }
        let idx = [fx as usize, fy as usize, fz as usize];
        (idx[0] < self.dims[0] && idx[1] < self.dims[1] && idx[2] < self.dims[2]).then_some(idx)
    }

    pub fn cell_center(&self, [x, y, z]: [usize; 3]) -> Point3 {
        Point3::new(
            self.origin.x + (x as f64 + 0.5) * self.cell_size,
            self.origin.y + (y as f64 + 0.5) * self.cell_size,
            (z as f64 + 0.5) * self.cell_size,
        )
    }

    /// Occupancy at a world point; everything outside the volume is free.
    pub fn occupied_at(&self, p: Point3) -> bool {
        self.world_to_index(p).is_some_and(|i| self.get(i))
    }

    /// Top of the occupied column rising from layer 0 at (x, y), i.e. the surface
    /// a parked car would rest on. Zero for free ground and outside the grid.
    pub fn ground_height(&self, p: Point2) -> f64 {
        let Some([x, y, _]) = self.world_to_index(p.with_z(0.0)) else {
            return 0.0;
        };
        let mut z = 0;
        while z < self.dims[2] && self.get([x, y, z]) {
            z += 1;
        }
        z as f64 * self.cell_size
    }

    /// Layer index for an altitude, clamped into the volume; `None` above the top.
    pub fn layer_at(&self, altitude: f64) -> Option<usize> {
        let z = (altitude / self.cell_size).floor();
        if z < 0.0 {
            return Some(0);
        }
        ((z as usize) < self.dims[2]).then_some(z as usize)
    }

    /// Marks every voxel whose center lies in the world-space box.
    pub fn fill_box(&mut self, min: Point3, max: Point3) {
        for z in 0..self.dims[2] {
            for y in 0..self.dims[1] {
                for x in 0..self.dims[0] {
                    let c = self.cell_center([x, y, z]);
                    if c.x >= min.x
                        && c.x <= max.x
                        && c.y >= min.y
                        && c.y <= max.y
                        && c.z >= min.z
                        && c.z <= max.z
                    {
                        self.set([x, y, z], true);
                    }
                }
            }
        }
    }

    /// Packs cells LSB-first into bytes in linear-index order.
    pub fn packed_bits(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.cells.len().div_ceil(8)];
        for (i, &c) in self.cells.iter().enumerate() {
            if c {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    pub fn unpack_bits(bytes: &[u8], n: usize) -> Result<Vec<bool>> {
        if bytes.len() < n.div_ceil(8) {
            return Err(Error::GridFormat(format!(
                "need {} bytes of cell data, got {}",
                n.div_ceil(8),
                bytes.len()
            )));
        }
        Ok((0..n).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect())
    }

    pub fn to_nsog(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(17 + self.cells.len() / 8);
        out.extend_from_slice(NSOG_MAGIC);
        out.push(NSOG_VERSION);
        for d in self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend(self.packed_bits());
        out
    }

    /// Decodes an `NSOG` payload; placement (origin, cell size) comes from the scenario.
    pub fn from_nsog(bytes: &[u8], origin: Point2, cell_size: f64) -> Result<Self> {
        if bytes.len() < 17 || &bytes[..4] != NSOG_MAGIC {
            return Err(Error::GridFormat("missing NSOG magic".into()));
        }
        if bytes[4] != NSOG_VERSION {
            return Err(Error::GridFormat(format!(
                "unsupported NSOG version {}",
                bytes[4]
            )));
        }
        let mut dims = [0usize; 3];
        for (k, d) in dims.iter_mut().enumerate() {
            let o = 5 + 4 * k;
            *d = u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        }
        let n = dims[0] * dims[1] * dims[2];
        let cells = Self::unpack_bits(&bytes[17..], n)?;
        Self::from_cells(origin, cell_size, dims, cells)
    }

    /// True when the straight segment `a`-`b` passes through no occupied voxel.
    ///
    /// 3D voxel traversal (Amanatides & Woo). Voxels the segment only touches at
    /// an edge or corner are skipped, so only voxels it crosses with positive
    /// length can block it.
    pub fn segment_clear(&self, a: Point3, b: Point3) -> bool {
        self.first_occupied(a, b).is_none()
    }

    pub fn first_occupied(&self, a: Point3, b: Point3) -> Option<[usize; 3]> {
        let cs = self.cell_size;
        // work in cell units
        let p0 = [
            (a.x - self.origin.x) / cs,
            (a.y - self.origin.y) / cs,
            a.z / cs,
        ];
        let p1 = [
            (b.x - self.origin.x) / cs,
            (b.y - self.origin.y) / cs,
            b.z / cs,
        ];
        let d = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
        let dims = [
            self.dims[0] as f64,
            self.dims[1] as f64,
            self.dims[2] as f64,
        ];

        // clip to the grid box
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..3 {
            if d[k].abs() < 1e-15 {
                if p0[k] < 0.0 || p0[k] > dims[k] {
                    return None;
                }
            } else {
                let (mut ta, mut tb) = ((0.0 - p0[k]) / d[k], (dims[k] - p0[k]) / d[k]);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
            }
        }
        if t1 - t0 <= 1e-12 {
            return None;
        }

        // start voxel: sample slightly inside the clipped interval
        let tm = t0 + 1e-9 * (t1 - t0);
        let mut cell = [0i64; 3];
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for k in 0..3 {
            let pos = p0[k] + d[k] * tm;
            cell[k] = (pos.floor() as i64).clamp(0, self.dims[k] as i64 - 1);
            if d[k] > 0.0 {
                step[k] = 1;
                t_delta[k] = 1.0 / d[k];
                t_max[k] = ((cell[k] + 1) as f64 - p0[k]) / d[k];
            } else if d[k] < 0.0 {
                step[k] = -1;
                t_delta[k] = -1.0 / d[k];
                t_max[k] = (cell[k] as f64 - p0[k]) / d[k];
            }
        }

        let mut t_enter = t0;
        loop {
            let t_exit = t_max[0].min(t_max[1]).min(t_max[2]).min(t1);
            let idx = [cell[0] as usize, cell[1] as usize, cell[2] as usize];
            if t_exit - t_enter > 1e-12 && self.get(idx) {
                return Some(idx);
            }
            if t_exit >= t1 - 1e-12 {
                return None;
            }
            // advance every axis whose boundary is reached at t_exit (corner crossings step together)
            let tie = 1e-12 * t_exit.abs().max(1.0);
            for k in 0..3 {
                if (t_max[k] - t_exit).abs() <= tie {
                    cell[k] += step[k];
                    t_max[k] += t_delta[k];
                }
            }
            if (0..3).any(|k| cell[k] < 0 || cell[k] >= self.dims[k] as i64) {
                return None;
            }
            t_enter = t_exit;
        }
    }

    /// Connected (4-neighbour) clusters of occupied cells in one layer, as lists of (x, y) indices.
    pub fn layer_clusters(&self, z: usize) -> Vec<Vec<[usize; 2]>> {
        let [nx, ny, _] = self.dims;
        let mut seen = vec![false; nx * ny];
        let mut out = Vec::new();
        for y in 0..ny {
            for x in 0..nx {
                if seen[x + nx * y] || !self.get([x, y, z]) {
                    continue;
                }
                let mut cluster = Vec::new();
                let mut stack = vec![[x, y]];
                seen[x + nx * y] = true;
                while let Some([cx, cy]) = stack.pop() {
                    cluster.push([cx, cy]);
                    let mut push = |px: usize, py: usize| {
                        if !seen[px + nx * py] && self.get([px, py, z]) {
                            seen[px + nx * py] = true;
                            stack.push([px, py]);
                        }
                    };
                    if cx > 0 {
                        push(cx - 1, cy);
                    }
                    if cx + 1 < nx {
                        push(cx + 1, cy);
                    }
                    if cy > 0 {
                        push(cx, cy - 1);
                    }
                    if cy + 1 < ny {
                        push(cx, cy + 1);
                    }
                }
                cluster.sort();
                out.push(cluster);
            }
        }
        out
    }
}
