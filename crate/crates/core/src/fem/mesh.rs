//! Triangulations of the unit disk resolving the window junctions.
//!
//! The base mesh is a structured polar mesh (ring `i` of `n` carries `6i`
//! vertices). It is refined by newest-vertex bisection until every element
//! satisfies a size bound that shrinks geometrically, ratio 1/2 per level,
//! toward the window endpoints. Boundary midpoints are placed on the circle,
//! and a window endpoint falling in the middle half of a bisected boundary
//! edge becomes the new vertex, so every endpoint ends up a mesh vertex.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::geometry::{arc_half_width, wrap_pi, wrap_two_pi, BoundaryClass, Dimension, DomainConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid mesh parameter: {0}")]
    InvalidParameter(String),
    #[error("window {window} is covered by only {edges} boundary edges (need 8)")]
    WindowResolution { window: usize, edges: usize },
    #[error("mesh invariant violated: {0}")]
    Invariant(String),
    #[error("meshing requires a planar domain")]
    NotPlanar,
    #[error("refinement did not terminate")]
    RefinementLimit,
}

/// Grading slope: an element at distance `d` from a junction has diameter at most `d/4`.
const GRADING_SLOPE: f64 = 0.25;
/// Absolute element-size floor; coordinates near the circle carry ~1e-16 rounding.
const SIZE_FLOOR: f64 = 5e-14;

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary edges in counterclockwise order along the circle, tagged.
    pub boundary_edges: Vec<(usize, usize, BoundaryClass)>,
    /// Vertices at window arc endpoints.
    pub junction_nodes: Vec<usize>,
    boundary_angle: Vec<Option<f64>>,
    low_accuracy: bool,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Polar angle of a boundary vertex, `None` for interior vertices.
    pub fn boundary_angle(&self, v: usize) -> Option<f64> {
        self.boundary_angle[v]
    }

    /// Set when the mesh was built without junction grading.
    pub fn low_accuracy_near_junctions(&self) -> bool {
        self.low_accuracy
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        signed_area(a, b, c)
    }

    pub fn window_edge_count(&self, k: usize) -> usize {
        self.boundary_edges
            .iter()
            .filter(|e| e.2 == BoundaryClass::Window(k))
            .count()
    }

    /// Vertices lying on edges with the given tag.
    pub fn vertices_with_tag(&self, tag: BoundaryClass) -> Vec<usize> {
        let mut set = std::collections::BTreeSet::new();
        for &(a, b, t) in &self.boundary_edges {
            if t == tag {
                set.insert(a);
                set.insert(b);
            }
        }
        set.into_iter().collect()
    }

    pub fn max_diameter(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| diameter(t.map(|i| self.vertices[i])))
            .fold(0.0, f64::max)
    }

    pub fn min_diameter(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| diameter(t.map(|i| self.vertices[i])))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_invariants(&self) -> Result<(), MeshError> {
        let bad = |m: String| Err(MeshError::Invariant(m));
        for (t, tri) in self.triangles.iter().enumerate() {
            if !(self.triangle_area(t) > 0.0) {
                return bad(format!("triangle {t} {tri:?} is not positively oriented"));
            }
        }
        for (v, a) in self.boundary_angle.iter().enumerate() {
            if a.is_some() {
                let [x, y] = self.vertices[v];
                if (x.hypot(y) - 1.0).abs() > 1e-12 {
                    return bad(format!("boundary vertex {v} off the circle"));
                }
            }
        }
        // Every edge belongs to one or two triangles; the single ones are the boundary loop.
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in tri_edges(t) {
                *count.entry(key(a, b)).or_default() += 1;
            }
        }
        let mut open: HashSet<(usize, usize)> = HashSet::new();
        for (e, c) in count {
            match c {
                1 => {
                    open.insert(e);
                }
                2 => {}
                _ => return bad(format!("edge {e:?} shared by {c} triangles")),
            }
        }
        if open.len() != self.boundary_edges.len() {
            return bad(format!(
                "{} open edges but {} boundary edges",
                open.len(),
                self.boundary_edges.len()
            ));
        }
        for (i, &(a, b, _)) in self.boundary_edges.iter().enumerate() {
            if !open.contains(&key(a, b)) {
                return bad(format!("boundary edge {a}-{b} is not a mesh edge"));
            }
            let next = self.boundary_edges[(i + 1) % self.boundary_edges.len()];
            if next.0 != b {
                return bad("boundary edges do not form a closed loop".into());
            }
        }
        // Tags change only at junction nodes.
        let junctions: HashSet<usize> = self.junction_nodes.iter().copied().collect();
        for (i, &(_, b, t)) in self.boundary_edges.iter().enumerate() {
            let next = self.boundary_edges[(i + 1) % self.boundary_edges.len()];
            if next.2 != t && !junctions.contains(&b) {
                return bad(format!("tag changes at non-junction vertex {b}"));
            }
        }
        Ok(())
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn tri_edges(t: &[usize; 3]) -> [(usize, usize); 3] {
    [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn d2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn diameter(p: [[f64; 2]; 3]) -> f64 {
    d2(p[0], p[1]).max(d2(p[1], p[2])).max(d2(p[2], p[0])).sqrt()
}

struct Endpoint {
    angle: f64,
    vertex: Option<usize>,
}

struct Builder {
    vertices: Vec<[f64; 2]>,
    angle: Vec<Option<f64>>,
    /// Refinement edge is `(t[0], t[1])`, newest vertex `t[2]`.
    tris: Vec<[usize; 3]>,
    boundary: HashSet<(usize, usize)>,
    endpoints: Vec<Endpoint>,
}

impl Builder {
    fn polar(n: usize) -> Self {
        let mut vertices = vec![[0.0, 0.0]];
        let mut angle = vec![None];
        let mut rings: Vec<Vec<usize>> = vec![vec![0]];
        for i in 1..=n {
            let m = 6 * i;
            let r = i as f64 / n as f64;
            let shift = if i == n { 0.0 } else { 0.5 * (i % 2) as f64 };
            let ring = (0..m)
                .map(|j| {
                    let a = std::f64::consts::TAU * (j as f64 + shift) / m as f64;
                    vertices.push(if i == n { [a.cos(), a.sin()] } else { [r * a.cos(), r * a.sin()] });
                    angle.push((i == n).then_some(a));
                    vertices.len() - 1
                })
                .collect();
            rings.push(ring);
        }
        let ang = |v: &[f64; 2]| wrap_two_pi(v[1].atan2(v[0]));
        let mut tris = Vec::new();
        for i in 1..=n {
            let (inner, outer) = (&rings[i - 1], &rings[i]);
            if inner.len() == 1 {
                for j in 0..outer.len() {
                    tris.push([inner[0], outer[j], outer[(j + 1) % outer.len()]]);
                }
                continue;
            }
            let (mi, mo) = (inner.len(), outer.len());
            let unwrap = |ring: &Vec<usize>, j: usize| {
                let base = ang(&vertices[ring[j % ring.len()]]);
                let turns = (j / ring.len()) as f64;
                // Ring starts may sit slightly past 0; keep the sequence monotone.
                let first = ang(&vertices[ring[0]]);
                let a = if base < first - 1e-12 { base + std::f64::consts::TAU } else { base };
                a + turns * std::f64::consts::TAU
            };
            let (mut a, mut b) = (0, 0);
            while a < mi || b < mo {
                let na = unwrap(inner, a + 1);
                let nb = unwrap(outer, b + 1);
                if b == mo || (a < mi && na < nb) {
                    tris.push([inner[a % mi], inner[(a + 1) % mi], outer[b % mo]]);
                    a += 1;
                } else {
                    tris.push([inner[a % mi], outer[b % mo], outer[(b + 1) % mo]]);
                    b += 1;
                }
            }
        }
        let mut boundary = HashSet::new();
        let outer = &rings[n];
        for j in 0..outer.len() {
            boundary.insert(key(outer[j], outer[(j + 1) % outer.len()]));
        }
        let mut b = Self {
            vertices,
            angle,
            tris: Vec::new(),
            boundary,
            endpoints: Vec::new(),
        };
        for t in tris {
            b.push_initial(t);
        }
        b
    }

    /// Orients counterclockwise and puts the longest edge first.
    fn push_initial(&mut self, mut t: [usize; 3]) {
        let p = t.map(|i| self.vertices[i]);
        if signed_area(p[0], p[1], p[2]) < 0.0 {
            t.swap(1, 2);
        }
        let p = t.map(|i| self.vertices[i]);
        let lens = [d2(p[0], p[1]), d2(p[1], p[2]), d2(p[2], p[0])];
        let mut best = 0;
        for i in 1..3 {
            if lens[i] > lens[best] {
                best = i;
            }
        }
        t.rotate_left(best);
        self.tris.push(t);
    }

    fn new_boundary_vertex(&mut self, a: usize, b: usize) -> usize {
        let (aa, ab) = (self.angle[a].unwrap(), self.angle[b].unwrap());
        let span = wrap_pi(ab - aa);
        let mut theta = aa + 0.5 * span;
        let mut snapped = None;
        for (i, e) in self.endpoints.iter().enumerate() {
            if e.vertex.is_some() {
                continue;
            }
            let rel = wrap_pi(e.angle - aa) / span;
            if (0.25..=0.75).contains(&rel) {
                theta = e.angle;
                snapped = Some(i);
                break;
            }
        }
        let theta = wrap_two_pi(theta);
        self.vertices.push([theta.cos(), theta.sin()]);
        self.angle.push(Some(theta));
        let v = self.vertices.len() - 1;
        if let Some(i) = snapped {
            self.endpoints[i].vertex = Some(v);
        }
        v
    }

    fn capture_coincident_endpoints(&mut self) {
        for e in &mut self.endpoints {
            if e.vertex.is_some() {
                continue;
            }
            for (v, a) in self.angle.iter().enumerate() {
                if let Some(a) = a {
                    if wrap_pi(e.angle - a).abs() < 1e-14 {
                        e.vertex = Some(v);
                        self.vertices[v] = [e.angle.cos(), e.angle.sin()];
                        break;
                    }
                }
            }
        }
    }

    fn refine(&mut self, marked: &[bool]) {
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (t, &m) in self.tris.iter().zip(marked) {
            if m {
                edges.insert(key(t[0], t[1]));
            }
        }
        loop {
            let mut changed = false;
            for t in &self.tris {
                let r = key(t[0], t[1]);
                if edges.contains(&r) {
                    continue;
                }
                if edges.contains(&key(t[1], t[2])) || edges.contains(&key(t[2], t[0])) {
                    edges.insert(r);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let old = std::mem::take(&mut self.tris);
        let mut out = Vec::with_capacity(old.len() * 2);
        let mut stack = Vec::new();
        for t in old {
            stack.push(t);
            while let Some(t) = stack.pop() {
                let e = key(t[0], t[1]);
                if !edges.contains(&e) {
                    out.push(t);
                    continue;
                }
                let m = match mids.get(&e) {
                    Some(&m) => m,
                    None => {
                        let m = if self.boundary.remove(&e) {
                            let m = self.new_boundary_vertex(t[0], t[1]);
                            self.boundary.insert(key(t[0], m));
                            self.boundary.insert(key(m, t[1]));
                            m
                        } else {
                            let (a, b) = (self.vertices[t[0]], self.vertices[t[1]]);
                            self.vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                            self.angle.push(None);
                            self.vertices.len() - 1
                        };
                        mids.insert(e, m);
                        m
                    }
                };
                stack.push([t[2], t[0], m]);
                stack.push([t[1], t[2], m]);
            }
        }
        self.tris = out;
    }
}

/// Element-size bound around the junctions.
struct SizeField {
    h_max: f64,
    junctions: Vec<([f64; 2], f64)>,
}

impl SizeField {
    fn bound(&self, centroid: [f64; 2], diam: f64) -> f64 {
        let mut h = self.h_max;
        for &(j, floor) in &self.junctions {
            let d = (d2(centroid, j).sqrt() - diam).max(0.0);
            h = h.min(floor.max(GRADING_SLOPE * d));
        }
        h
    }
}

pub fn build_mesh(
    config: &DomainConfig<f64>,
    h_max: f64,
    grading_levels: u32,
) -> Result<Mesh, MeshError> {
    if config.dimension() != Dimension::Two {
        return Err(MeshError::NotPlanar);
    }
    if !(h_max > 0.0 && h_max <= 0.5) {
        return Err(MeshError::InvalidParameter(format!("h_max = {h_max} outside (0, 0.5]")));
    }
    if grading_levels > 60 {
        return Err(MeshError::InvalidParameter(format!("grading_levels = {grading_levels} > 60")));
    }
    let n = (1.0 / h_max).ceil().max(2.0) as usize;
    let mut b = Builder::polar(n);

    let mut junctions = Vec::new();
    for w in config.windows() {
        let c = w.center_angle().expect("planar window");
        let hw = arc_half_width(w.chord_radius());
        let floor = ((2.0 * hw / 8.0).min(h_max) * 0.5f64.powi(grading_levels as i32)).max(SIZE_FLOOR);
        for s in [-1.0, 1.0] {
            let a = wrap_two_pi(c + s * hw);
            b.endpoints.push(Endpoint { angle: a, vertex: None });
            junctions.push(([a.cos(), a.sin()], floor));
        }
    }
    b.capture_coincident_endpoints();
    let field = SizeField { h_max, junctions };

    let mut converged = false;
    for _ in 0..400 {
        let mut marked: Vec<bool> = b
            .tris
            .iter()
            .map(|t| {
                let p = t.map(|i| b.vertices[i]);
                let diam = diameter(p);
                let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
                diam > field.bound(c, diam)
            })
            .collect();
        // Force refinement of boundary edges still straddling an endpoint.
        let pending: Vec<f64> = b.endpoints.iter().filter(|e| e.vertex.is_none()).map(|e| e.angle).collect();
        if !pending.is_empty() {
            for (ti, t) in b.tris.iter().enumerate() {
                for (u, v) in tri_edges(t) {
                    if !b.boundary.contains(&key(u, v)) {
                        continue;
                    }
                    let (au, av) = (b.angle[u].unwrap(), b.angle[v].unwrap());
                    let span = wrap_pi(av - au);
                    if pending.iter().any(|&e| {
                        let rel = wrap_pi(e - au) / span;
                        rel > 0.0 && rel < 1.0
                    }) {
                        marked[ti] = true;
                    }
                }
            }
        }
        if !marked.iter().any(|&m| m) {
            converged = true;
            break;
        }
        b.refine(&marked);
        b.capture_coincident_endpoints();
    }
    if !converged || b.endpoints.iter().any(|e| e.vertex.is_none()) {
        return Err(MeshError::RefinementLimit);
    }

    let mesh = finish(config, b, grading_levels == 0)?;
    for k in 0..config.windows().len() {
        let edges = mesh.window_edge_count(k);
        if edges < 8 {
            return Err(MeshError::WindowResolution { window: k, edges });
        }
    }
    mesh.check_invariants()?;
    Ok(mesh)
}

fn finish(config: &DomainConfig<f64>, b: Builder, low_accuracy: bool) -> Result<Mesh, MeshError> {
    let mut bverts: Vec<(f64, usize)> = b
        .angle
        .iter()
        .enumerate()
        .filter_map(|(v, a)| a.map(|a| (a, v)))
        .collect();
    bverts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let junction_nodes: Vec<usize> = b.endpoints.iter().filter_map(|e| e.vertex).collect();
    let arcs: Vec<_> = config.windows().iter().map(crate::geometry::window_arc).collect();
    let classify = |a: f64| {
        arcs.iter()
            .position(|arc| arc.contains(a))
            .map_or(BoundaryClass::Neumann, BoundaryClass::Window)
    };
    let mut boundary_edges = Vec::with_capacity(bverts.len());
    for i in 0..bverts.len() {
        let (a0, v0) = bverts[i];
        let (a1, v1) = bverts[(i + 1) % bverts.len()];
        if !b.boundary.contains(&key(v0, v1)) {
            return Err(MeshError::Invariant(format!(
                "consecutive boundary vertices {v0}, {v1} are not joined by an edge"
            )));
        }
        let (c0, c1) = (classify(a0), classify(a1));
        let tag = if c0 == c1 {
            c0
        } else {
            // One end is a junction: the edge takes the tag of its midpoint.
            classify(a0 + 0.5 * wrap_pi(a1 - a0))
        };
        boundary_edges.push((v0, v1, tag));
    }
    Ok(Mesh {
        vertices: b.vertices,
        triangles: b.tris,
        boundary_edges,
        junction_nodes,
        boundary_angle: b.angle,
        low_accuracy,
    })
}
