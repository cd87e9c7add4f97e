//! Obstacle inflation, visibility graphs and A* shortest paths at flight altitude.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, dilate, Point2, Polygon2, Rect};
use crate::mission::{OccupancyGrid, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavConfig {
    pub altitude: f64,
    pub speed: f64,
    pub inflation_margin: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            altitude: 40.0,
            speed: 10.0,
            inflation_margin: 3.0,
        }
    }
}

impl NavConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.speed > 0.0) {
            return Err(Error::Config(format!(
                "speed must be positive, got {}",
                self.speed
            )));
        }
        if !(self.altitude > 0.0) {
            return Err(Error::Config(format!(
                "altitude must be positive, got {}",
                self.altitude
            )));
        }
        if !(self.inflation_margin >= 0.0) {
            return Err(Error::Config("inflation margin must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Distance a projected node is pushed past the obstacle boundary.
const PROJECTION_CLEARANCE: f64 = 1e-3;

/// KOZ polygons plus occupied-cell clusters at the flight layer, each dilated
/// by `margin`. A cluster is replaced by the convex hull of its cells.
pub fn inflate_obstacles(
    kozs: &[Polygon2],
    occ: &OccupancyGrid,
    altitude: f64,
    margin: f64,
) -> Vec<Polygon2> {
    let mut out: Vec<Polygon2> = kozs.iter().map(|k| dilate(k, margin)).collect();
    if let Some(z) = occ.layer_at(altitude) {
        let cs = occ.cell_size();
        let o = occ.origin();
        for cluster in occ.layer_clusters(z) {
            let corners: Vec<Point2> = cluster
                .iter()
                .flat_map(|&[x, y]| {
                    let (x0, y0) = (o.x + x as f64 * cs, o.y + y as f64 * cs);
                    [
                        Point2::new(x0, y0),
                        Point2::new(x0 + cs, y0),
                        Point2::new(x0 + cs, y0 + cs),
                        Point2::new(x0, y0 + cs),
                    ]
                })
                .collect();
            out.push(dilate(&Polygon2::new(convex_hull(&corners)), margin));
        }
    }
    out
}

/// True when the segment crosses no obstacle interior.
pub fn segment_free(obstacles: &[Polygon2], a: Point2, b: Point2) -> bool {
    obstacles.iter().all(|o| !o.segment_enters_interior(a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<Point2>,
    pub length: f64,
}

impl Path {
    fn from_points(waypoints: Vec<Point2>) -> Self {
        let length = waypoints.windows(2).map(|w| w[0].dist(w[1])).sum();
        Self { waypoints, length }
    }
}

pub fn travel_time(p: &Path, speed: f64) -> f64 {
    p.length / speed
}

/// A query node that had to be moved out of an obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedNode {
    pub original: Point2,
    pub projected: Point2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityGraph {
    pub nodes: Vec<Point2>,
    /// Sorted adjacency lists of (neighbour, length).
    pub adj: Vec<Vec<(usize, f64)>>,
    pub obstacles: Vec<Polygon2>,
    pub projected: Vec<ProjectedNode>,
}

impl VisibilityGraph {
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].iter().any(|&(w, _)| w == v)
    }
}

/// Moves `p` out of any obstacle whose interior contains it. Returns the new
/// point and whether it moved.
pub fn project_out(obstacles: &[Polygon2], p: Point2) -> (Point2, bool) {
    let mut q = p;
    let mut moved = false;
    for _ in 0..obstacles.len().max(1) * 2 {
        let Some(o) = obstacles.iter().find(|o| o.contains_strict(q)) else {
            break;
        };
        let b = o.nearest_boundary_point(q);
        let dir = b - q;
        let n = dir.norm();
        let unit = if n > 0.0 {
            dir * (1.0 / n)
        } else {
            Point2::new(1.0, 0.0)
        };
        q = b + unit * PROJECTION_CLEARANCE;
        moved = true;
    }
    (q, moved)
}

fn usable_vertex(obstacles: &[Polygon2], bounds: Option<Rect>, p: Point2) -> bool {
    bounds.is_none_or(|b| b.contains(p)) && obstacles.iter().all(|o| !o.contains_strict(p))
}

/// Nodes are every inflated-obstacle vertex plus `extra` (projected out of
/// obstacles when needed); an edge joins two nodes when their segment avoids
/// every obstacle interior. Vertices outside `bounds` or buried in another
/// obstacle get no edges.
pub fn build_visibility_graph(
    obstacles: &[Polygon2],
    extra: &[Point2],
    bounds: Option<Rect>,
) -> VisibilityGraph {
    let mut nodes: Vec<Point2> = obstacles
        .iter()
        .flat_map(|o| o.vertices.iter().copied())
        .collect();
    let mut usable: Vec<bool> = nodes
        .iter()
        .map(|&p| usable_vertex(obstacles, bounds, p))
        .collect();
    let mut projected = Vec::new();
    for &p in extra {
        let (q, moved) = project_out(obstacles, p);
        if moved {
            projected.push(ProjectedNode {
                original: p,
                projected: q,
            });
        }
        nodes.push(q);
        usable.push(obstacles.iter().all(|o| !o.contains_strict(q)));
    }
    let n = nodes.len();
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        if !usable[u] {
            continue;
        }
        for v in u + 1..n {
            if usable[v] && segment_free(obstacles, nodes[u], nodes[v]) {
                let d = nodes[u].dist(nodes[v]);
                adj[u].push((v, d));
                adj[v].push((u, d));
            }
        }
    }
    VisibilityGraph {
        nodes,
        adj,
        obstacles: obstacles.to_vec(),
        projected,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    h: f64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // BinaryHeap is a max-heap: reverse so the smallest (f, h, id) pops first
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then(o.h.total_cmp(&self.h))
            .then(o.node.cmp(&self.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// A* over an implicit graph given node positions and a neighbour callback.
/// Returns the node sequence, or `None` when the goal is unreachable.
fn astar_core(
    n: usize,
    pos: &dyn Fn(usize) -> Point2,
    neighbours: &dyn Fn(usize, &mut Vec<(usize, f64)>),
    start: usize,
    goal: usize,
) -> Option<Vec<usize>> {
    let target = pos(goal);
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    g[start] = 0.0;
    let h0 = pos(start).dist(target);
    heap.push(Open {
        f: h0,
        h: h0,
        node: start,
    });
    let mut buf = Vec::new();
    while let Some(Open { node, .. }) = heap.pop() {
        if closed[node] {
            continue;
        }
        if node == goal {
            let mut seq = vec![goal];
            let mut c = goal;
            while c != start {
                c = parent[c];
                seq.push(c);
            }
            seq.reverse();
            return Some(seq);
        }
        closed[node] = true;
        buf.clear();
        neighbours(node, &mut buf);
        for &(v, w) in &buf {
            if closed[v] {
                continue;
            }
            let cand = g[node] + w;
            if cand < g[v] {
                g[v] = cand;
                parent[v] = node;
                let h = pos(v).dist(target);
                heap.push(Open {
                    f: cand + h,
                    h,
                    node: v,
                });
            }
        }
    }
    None
}

/// Shortest path between two graph nodes.
pub fn astar(g: &VisibilityGraph, start: usize, goal: usize) -> Result<Path> {
    if start == goal {
        return Ok(Path {
            waypoints: vec![g.nodes[start]],
            length: 0.0,
        });
    }
    let seq = astar_core(
        g.nodes.len(),
        &|i| g.nodes[i],
        &|u, out| out.extend_from_slice(&g.adj[u]),
        start,
        goal,
    )
    .ok_or_else(|| {
        Error::Config(format!(
            "unreachable: no path from node {start} to node {goal}"
        ))
    })?;
    Ok(Path::from_points(
        seq.into_iter().map(|i| g.nodes[i]).collect(),
    ))
}

/// Precomputed obstacle graph answering point-to-point path queries.
#[derive(Debug, Clone)]
pub struct Navigator {
    base: VisibilityGraph,
    bounds: Rect,
    /// Connected component of each base node (usize::MAX for unusable vertices).
    component: Vec<usize>,
    pub speed: f64,
    pub altitude: f64,
}

impl Navigator {
    pub fn new(obstacles: Vec<Polygon2>, bounds: Rect, speed: f64, altitude: f64) -> Self {
        let base = build_visibility_graph(&obstacles, &[], Some(bounds));
        let n = base.nodes.len();
        let mut component = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if component[s] != usize::MAX || !usable_vertex(&obstacles, Some(bounds), base.nodes[s])
            {
                continue;
            }
            let mut stack = vec![s];
            component[s] = next;
            while let Some(u) = stack.pop() {
                for &(v, _) in &base.adj[u] {
                    if component[v] == usize::MAX {
                        component[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        Self {
            base,
            bounds,
            component,
            speed,
            altitude,
        }
    }

    pub fn from_scenario(s: &Scenario, cfg: &NavConfig) -> Self {
        let obstacles = inflate_obstacles(
            &s.koz_polygons(),
            &s.occupancy,
            cfg.altitude,
            cfg.inflation_margin,
        );
        Self::new(obstacles, s.map_extent, cfg.speed, cfg.altitude)
    }

    pub fn obstacles(&self) -> &[Polygon2] {
        &self.base.obstacles
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn is_free(&self, p: Point2) -> bool {
        self.bounds.contains(p) && self.obstacles().iter().all(|o| !o.contains_strict(p))
    }

    pub fn segment_free(&self, a: Point2, b: Point2) -> bool {
        segment_free(self.obstacles(), a, b)
    }

    pub fn project_out(&self, p: Point2) -> (Point2, bool) {
        project_out(self.obstacles(), p)
    }

    /// Visibility graph over the obstacle vertices plus `extra` query nodes.
    pub fn graph_with(&self, extra: &[Point2]) -> VisibilityGraph {
        build_visibility_graph(self.obstacles(), extra, Some(self.bounds))
    }

    fn visible_from(&self, p: Point2) -> Vec<(usize, f64)> {
        (0..self.base.nodes.len())
            .filter(|&i| {
                self.component[i] != usize::MAX && self.segment_free(p, self.base.nodes[i])
            })
            .map(|i| (i, p.dist(self.base.nodes[i])))
            .collect()
    }

    /// True when some collision-free path joins `a` and `b`.
    pub fn reachable(&self, a: Point2, b: Point2) -> bool {
        if !self.is_free(a) || !self.is_free(b) {
            return false;
        }
        if self.segment_free(a, b) {
            return true;
        }
        let ca: Vec<usize> = self
            .visible_from(a)
            .iter()
            .map(|&(i, _)| self.component[i])
            .collect();
        self.visible_from(b)
            .iter()
            .any(|&(i, _)| ca.contains(&self.component[i]))
    }

    /// Shortest collision-free path between free points.
    pub fn shortest_path(&self, a: Point2, b: Point2) -> Option<Path> {
        if a == b {
            return Some(Path {
                waypoints: vec![a],
                length: 0.0,
            });
        }
        if self.segment_free(a, b) {
            return Some(Path::from_points(vec![a, b]));
        }
        let n = self.base.nodes.len();
        let (sa, sb) = (n, n + 1);
        let from_a = self.visible_from(a);
        let from_b = self.visible_from(b);
        let pos = |i: usize| match i {
            i if i == sa => a,
            i if i == sb => b,
            i => self.base.nodes[i],
        };
        let neighbours = |u: usize, out: &mut Vec<(usize, f64)>| {
            if u == sa {
                out.extend_from_slice(&from_a);
            } else if u == sb {
                out.extend_from_slice(&from_b);
            } else {
                out.extend_from_slice(&self.base.adj[u]);
                if let Some(&(_, d)) = from_b.iter().find(|&&(i, _)| i == u) {
                    out.push((sb, d));
                }
            }
        };
        let seq = astar_core(n + 2, &pos, &neighbours, sa, sb)?;
        Some(Path::from_points(seq.into_iter().map(pos).collect()))
    }

    pub fn distance(&self, a: Point2, b: Point2) -> Option<f64> {
        self.shortest_path(a, b).map(|p| p.length)
    }

    pub fn travel_time(&self, p: &Path) -> f64 {
        travel_time(p, self.speed)
    }
}
