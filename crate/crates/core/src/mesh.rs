//! Deterministic meshes for intervals and disks.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, FracError, Result};
use crate::geometry::{dist, Domain, DomainKind, Point};

/// Default floor for the smallest triangle angle, in degrees.
pub const DEFAULT_MIN_ANGLE_DEG: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Domain,
    pub nodes: Vec<Point>,
    /// Segments (two node indices) or counter-clockwise triangles (three).
    pub elements: Vec<Vec<usize>>,
    pub boundary: Vec<bool>,
    /// Maximum element diameter.
    pub h: f64,
    delta: Vec<f64>,
    dof_of_node: Vec<Option<usize>>,
    interior: Vec<usize>,
    locator: Option<BucketGrid>,
}

/// JSON layout of an exported mesh.
#[derive(Debug, Serialize)]
pub struct MeshExport {
    pub nodes: Vec<Vec<f64>>,
    pub elements: Vec<Vec<usize>>,
    pub boundary: Vec<usize>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.elements == other.elements
    }
}

/// Builds the mesh for `domain` at the given resolution: `resolution`
/// uniform segments for intervals, a ring triangulation with
/// `h <= radius / resolution` for disks.
pub fn build_mesh(domain: &Domain, resolution: usize) -> Result<Mesh> {
    build_mesh_with_floor(domain, resolution, DEFAULT_MIN_ANGLE_DEG)
}

pub fn build_mesh_with_floor(domain: &Domain, resolution: usize, min_angle_deg: f64) -> Result<Mesh> {
    if resolution < 2 {
        return Err(invalid("resolution", format!("must be >= 2, got {resolution}")));
    }
    match domain.kind {
        DomainKind::Interval { a, b } => {
            let m = resolution;
            let nodes: Vec<f64> = (0..=m)
                .map(|i| {
                    if i == m {
                        b
                    } else {
                        a + (b - a) * i as f64 / m as f64
                    }
                })
                .collect();
            Mesh::interval_from_nodes(domain, &nodes)
        }
        DomainKind::Disk { center, radius } => {
            let target = radius / resolution as f64;
            let mut rings = resolution;
            loop {
                let mesh = disk_rings(domain, center, radius, rings)?;
                if mesh.h <= target * (1.0 + 1e-12) {
                    let angle = mesh.min_angle_deg();
                    if angle < min_angle_deg {
                        return Err(FracError::DegenerateMesh {
                            min_angle_deg: angle,
                            floor_deg: min_angle_deg,
                        });
                    }
                    return Ok(mesh);
                }
                rings += 1;
            }
        }
    }
}

fn disk_rings(domain: &Domain, center: Point, radius: f64, rings: usize) -> Result<Mesh> {
    let mut nodes = vec![center];
    let mut ring_start = vec![0usize];
    let mut ring_len = vec![1usize];
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        let n = 6 * k;
        ring_start.push(nodes.len());
        ring_len.push(n);
        for j in 0..n {
            let t = 2.0 * PI * j as f64 / n as f64;
            let p = if k == rings {
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            } else {
                [center[0] + r * t.cos(), center[1] + r * t.sin()]
            };
            nodes.push(p);
        }
    }
    let mut elements = Vec::new();
    for k in 1..=rings {
        let (si, ni) = (ring_start[k - 1], ring_len[k - 1]);
        let (so, no) = (ring_start[k], ring_len[k]);
        if ni == 1 {
            for j in 0..no {
                elements.push(vec![si, so + j, so + (j + 1) % no]);
            }
            continue;
        }
        // merge the two rings by angle
        let (mut i, mut j) = (0usize, 0usize);
        while i < ni || j < no {
            let next_inner = (i + 1) as f64 / ni as f64;
            let next_outer = (j + 1) as f64 / no as f64;
            if j >= no || (i < ni && next_inner <= next_outer) {
                elements.push(vec![si + i % ni, si + (i + 1) % ni, so + j % no]);
                i += 1;
            } else {
                elements.push(vec![si + i % ni, so + (j + 1) % no, so + j % no]);
                j += 1;
            }
        }
    }
    for e in elements.iter_mut() {
        if signed_area(&nodes[e[0]], &nodes[e[1]], &nodes[e[2]]) < 0.0 {
            e.swap(1, 2);
        }
    }
    let outer = ring_start[rings];
    let boundary = (0..nodes.len()).map(|i| i >= outer).collect();
    Mesh::assemble(domain, nodes, elements, boundary)
}

pub(crate) fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// One-dimensional mesh from sorted node coordinates spanning the
    /// interval domain exactly.
    pub fn interval_from_nodes(domain: &Domain, xs: &[f64]) -> Result<Mesh> {
        let DomainKind::Interval { a, b } = domain.kind else {
            return Err(invalid("domain", "interval mesh needs an interval domain"));
        };
        if xs.len() < 3 {
            return Err(invalid("nodes", "need at least three nodes"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("nodes", "node coordinates must increase strictly"));
        }
        if xs[0] != a || xs[xs.len() - 1] != b {
            return Err(invalid("nodes", "end nodes must coincide with the interval ends"));
        }
        let nodes: Vec<Point> = xs.iter().map(|&x| [x, 0.0]).collect();
        let elements = (0..xs.len() - 1).map(|i| vec![i, i + 1]).collect();
        let n = xs.len();
        let boundary = (0..n).map(|i| i == 0 || i == n - 1).collect();
        Self::assemble(domain, nodes, elements, boundary)
    }

    fn assemble(domain: &Domain, nodes: Vec<Point>, elements: Vec<Vec<usize>>, boundary: Vec<bool>) -> Result<Mesh> {
        let mut delta = Vec::with_capacity(nodes.len());
        for (p, &b) in nodes.iter().zip(&boundary) {
            delta.push(if b { 0.0 } else { domain.boundary_distance(p)? });
        }
        let mut dof_of_node = vec![None; nodes.len()];
        let mut interior = Vec::new();
        for (i, &b) in boundary.iter().enumerate() {
            if !b {
                dof_of_node[i] = Some(interior.len());
                interior.push(i);
            }
        }
        let h = elements
            .iter()
            .map(|e| {
                let mut d: f64 = 0.0;
                for i in 0..e.len() {
                    for j in i + 1..e.len() {
                        d = d.max(dist(&nodes[e[i]], &nodes[e[j]]));
                    }
                }
                d
            })
            .fold(0.0, f64::max);
        let mut mesh = Mesh {
            domain: *domain,
            nodes,
            elements,
            boundary,
            h,
            delta,
            dof_of_node,
            interior,
            locator: None,
        };
        if mesh.dim() == 2 {
            mesh.locator = Some(BucketGrid::new(&mesh));
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Node indices of the interior nodes, in degree-of-freedom order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn num_dofs(&self) -> usize {
        self.interior.len()
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    /// Boundary distance δ at every node (zero on boundary nodes).
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.boundary[i]).collect()
    }

    /// Length (1D) or area (2D) of an element.
    pub fn element_measure(&self, e: usize) -> f64 {
        let el = &self.elements[e];
        match el.len() {
            2 => (self.nodes[el[1]][0] - self.nodes[el[0]][0]).abs(),
            _ => signed_area(&self.nodes[el[0]], &self.nodes[el[1]], &self.nodes[el[2]]).abs(),
        }
    }

    /// Physical point of reference coordinates (`xi` for segments,
    /// `(xi, eta)` for triangles).
    pub fn map_point(&self, e: usize, xi: f64, eta: f64) -> Point {
        let el = &self.elements[e];
        let p0 = self.nodes[el[0]];
        let p1 = self.nodes[el[1]];
        if el.len() == 2 {
            [p0[0] + xi * (p1[0] - p0[0]), 0.0]
        } else {
            let p2 = self.nodes[el[2]];
            [
                p0[0] + xi * (p1[0] - p0[0]) + eta * (p2[0] - p0[0]),
                p0[1] + xi * (p1[1] - p0[1]) + eta * (p2[1] - p0[1]),
            ]
        }
    }

    /// Smallest interior angle over all triangles, in degrees (180 for 1D).
    pub fn min_angle_deg(&self) -> f64 {
        if self.dim() == 1 {
            return 180.0;
        }
        let mut min = 180.0f64;
        for el in &self.elements {
            for k in 0..3 {
                let a = self.nodes[el[k]];
                let b = self.nodes[el[(k + 1) % 3]];
                let c = self.nodes[el[(k + 2) % 3]];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Locates the element containing `x` and returns it together with the
    /// barycentric weights of its vertices.
    pub fn locate(&self, x: &Point) -> Option<(usize, [f64; 3])> {
        if self.dim() == 1 {
            let xs = x[0];
            let n = self.nodes.len();
            if xs < self.nodes[0][0] || xs > self.nodes[n - 1][0] {
                return None;
            }
            let idx = self.nodes.partition_point(|p| p[0] <= xs);
            let e = idx.saturating_sub(1).min(n - 2);
            let (x0, x1) = (self.nodes[e][0], self.nodes[e + 1][0]);
            let t = (xs - x0) / (x1 - x0);
            return Some((e, [1.0 - t, t, 0.0]));
        }
        let grid = self.locator.as_ref()?;
        for &e in grid.candidates(x) {
            let el = &self.elements[e];
            let (a, b, c) = (self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]);
            let area = signed_area(&a, &b, &c);
            let l0 = signed_area(x, &b, &c) / area;
            let l1 = signed_area(&a, x, &c) / area;
            let l2 = 1.0 - l0 - l1;
            let tol = -1e-12;
            if l0 >= tol && l1 >= tol && l2 >= tol {
                return Some((e, [l0, l1, l2]));
            }
        }
        None
    }

    pub fn export(&self) -> MeshExport {
        MeshExport {
            nodes: self
                .nodes
                .iter()
                .map(|p| if self.dim() == 1 { vec![p[0]] } else { vec![p[0], p[1]] })
                .collect(),
            elements: self.elements.clone(),
            boundary: self.boundary_nodes(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.export()).expect("mesh export serializes")
    }
}

/// Uniform bucket grid for point location in triangle meshes.
#[derive(Debug, Clone)]
struct BucketGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(mesh: &Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &mesh.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let cell = mesh.h.max(1e-300);
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (e, el) in mesh.elements.iter().enumerate() {
            let (mut bl, mut bh) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &v in el {
                for k in 0..2 {
                    bl[k] = bl[k].min(mesh.nodes[v][k]);
                    bh[k] = bh[k].max(mesh.nodes[v][k]);
                }
            }
            let i0 = (((bl[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let i1 = (((bh[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let j0 = (((bl[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            let j1 = (((bh[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets[j * nx + i].push(e);
                }
            }
        }
        Self {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn candidates(&self, x: &Point) -> &[usize] {
        let fx = (x[0] - self.origin[0]) / self.cell;
        let fy = (x[1] - self.origin[1]) / self.cell;
        if fx < -1e-9 || fy < -1e-9 || fx > self.nx as f64 + 1e-9 || fy > self.ny as f64 + 1e-9 {
            return &[];
        }
        let i = (fx.max(0.0) as usize).min(self.nx - 1);
        let j = (fy.max(0.0) as usize).min(self.ny - 1);
        &self.buckets[j * self.nx + i]
    }
}
