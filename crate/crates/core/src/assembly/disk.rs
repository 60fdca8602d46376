//! Element-pair integrals for P1 triangles.
//!
//! Pairs are classified by the number of shared vertices. Identical pairs use
//! the overlap area of a triangle with its translate, which reduces the
//! singular part to a one-dimensional angular integral. Pairs sharing a
//! vertex or an edge use the homogeneity of the integrand in coordinates
//! centred at the common set, so the radial factor integrates in closed form
//! and only smooth integrals remain for Gauss rules.

use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::quadrature::{triangle_rule, GaussLegendre, TrianglePoint};

use super::LocalBlock;

pub(super) struct DiskContext {
    s: f64,
    nodes: Vec<Point>,
    tris: Vec<[usize; 3]>,
    areas: Vec<f64>,
    /// Gradients of the barycentric coordinates.
    grads: Vec<[[f64; 2]; 3]>,
    /// Boundary edges with their outward unit normals.
    bedges: Vec<(Point, Point, [f64; 2])>,
    touches_boundary: Vec<bool>,
    arc: GaussLegendre,
    cube: GaussLegendre,
    edge_rule: Vec<TrianglePoint>,
    far_rules: [Vec<TrianglePoint>; 4],
    mass_rule: Vec<TrianglePoint>,
    mass_rule_fine: Vec<TrianglePoint>,
    kappa_fine: GaussLegendre,
    kappa_coarse: GaussLegendre,
}

fn sub(a: &Point, b: &Point) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: &[f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

impl DiskContext {
    pub(super) fn new(mesh: &Mesh, s: f64) -> Self {
        let nodes = mesh.nodes.clone();
        let tris: Vec<[usize; 3]> = mesh.elements.iter().map(|e| [e[0], e[1], e[2]]).collect();
        let mut areas = Vec::with_capacity(tris.len());
        let mut grads = Vec::with_capacity(tris.len());
        for t in &tris {
            let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            let area2 = cross(&sub(&b, &a), &sub(&c, &a));
            areas.push(0.5 * area2.abs());
            // ∇λ_k = perp(opposite edge) / (2 area)
            let g = |p: &Point, q: &Point| [(p[1] - q[1]) / area2, (q[0] - p[0]) / area2];
            grads.push([g(&b, &c), g(&c, &a), g(&a, &b)]);
        }
        let mut edge_count = std::collections::BTreeMap::new();
        for (e, t) in tris.iter().enumerate() {
            for k in 0..3 {
                let (i, j) = (t[k], t[(k + 1) % 3]);
                let key = (i.min(j), i.max(j));
                edge_count.entry(key).or_insert_with(Vec::new).push((e, t[(k + 2) % 3]));
            }
        }
        let mut bedges = Vec::new();
        let mut touches_boundary = vec![false; tris.len()];
        for ((i, j), owners) in &edge_count {
            if owners.len() == 1 {
                let (p, q) = (nodes[*i], nodes[*j]);
                let r = nodes[owners[0].1];
                let t = sub(&q, &p);
                let mut n = [t[1] / norm(&t), -t[0] / norm(&t)];
                if dot(&n, &sub(&r, &p)) > 0.0 {
                    n = [-n[0], -n[1]];
                }
                bedges.push((p, q, n));
            }
        }
        for (e, t) in tris.iter().enumerate() {
            touches_boundary[e] = t.iter().any(|&v| mesh.boundary[v]);
        }
        Self {
            s,
            nodes,
            tris,
            areas,
            grads,
            bedges,
            touches_boundary,
            arc: GaussLegendre::new(16),
            cube: GaussLegendre::new(8),
            edge_rule: triangle_rule(8),
            far_rules: [triangle_rule(2), triangle_rule(3), triangle_rule(4), triangle_rule(6)],
            mass_rule: triangle_rule(4),
            mass_rule_fine: triangle_rule(10),
            kappa_fine: GaussLegendre::new(12),
            kappa_coarse: GaussLegendre::new(4),
        }
    }

    pub(super) fn block(&self, e: usize, f: usize) -> LocalBlock {
        if e == f {
            let mut blk = self.identical_block(e);
            self.add_complement(e, &mut blk);
            return blk;
        }
        let (te, tf) = (self.tris[e], self.tris[f]);
        let shared: Vec<usize> = te.iter().copied().filter(|v| tf.contains(v)).collect();
        match shared.len() {
            1 => self.vertex_block(e, f, shared[0]),
            2 => self.edge_block(e, f, shared[0], shared[1]),
            _ => self.separated_block(e, f),
        }
    }

    fn identical_block(&self, e: usize) -> LocalBlock {
        let s = self.s;
        let t = self.tris[e];
        let area = self.areas[e];
        let g = self.grads[e];
        let p = [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]];
        let edges = [sub(&p[1], &p[0]), sub(&p[2], &p[1]), sub(&p[0], &p[2])];
        let mut kinks: Vec<f64> = edges
            .iter()
            .map(|ed| ed[1].atan2(ed[0]).rem_euclid(std::f64::consts::PI))
            .collect();
        kinks.sort_by(f64::total_cmp);
        kinks.push(kinks[0] + std::f64::consts::PI);
        let mut ang = [[0.0; 3]; 3];
        for w in kinks.windows(2) {
            for (th, wt) in self.arc.mapped(w[0], w[1]) {
                let dir = [th.cos(), th.sin()];
                let beta: f64 = edges.iter().map(|ed| cross(ed, &dir).abs()).sum::<f64>() / (4.0 * area);
                let bpow = beta.powf(2.0 * s - 2.0);
                for a in 0..3 {
                    for b in 0..3 {
                        ang[a][b] += wt * dot(&g[a], &dir) * dot(&g[b], &dir) * bpow;
                    }
                }
            }
        }
        // the angular integrand has period π
        let radial = 2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s) * (4.0 - 2.0 * s));
        let mut blk = LocalBlock::new(t.to_vec(), (e, e));
        for a in 0..3 {
            for b in 0..3 {
                blk.add(a, b, 0.5 * area * radial * 2.0 * ang[a][b]);
            }
        }
        blk
    }

    /// Vertices of triangle `e` rotated so that `first` comes first.
    fn rotated(&self, e: usize, first: usize) -> [usize; 3] {
        let t = self.tris[e];
        let k = t.iter().position(|&v| v == first).expect("vertex of triangle");
        [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
    }

    fn vertex_block(&self, e: usize, f: usize, v: usize) -> LocalBlock {
        let s = self.s;
        let sigma = 2.0 + 2.0 * s;
        let te = self.rotated(e, v);
        let tf = self.rotated(f, v);
        let pv = self.nodes[v];
        let e1 = sub(&self.nodes[te[1]], &pv);
        let e2 = sub(&self.nodes[te[2]], &pv);
        let f1 = sub(&self.nodes[tf[1]], &pv);
        let f2 = sub(&self.nodes[tf[2]], &pv);
        let mut acc = [[0.0; 5]; 5];
        let gl = &self.cube;
        for (w, ww) in gl.mapped(0.0, 1.0) {
            for region in 0..2 {
                let (u1, u2) = if region == 0 { (1.0, w) } else { (w, 1.0) };
                for (al, wa) in gl.mapped(0.0, 1.0) {
                    let a = [
                        u1 * ((1.0 - al) * e1[0] + al * e2[0]),
                        u1 * ((1.0 - al) * e1[1] + al * e2[1]),
                    ];
                    for (be, wb) in gl.mapped(0.0, 1.0) {
                        let b = [
                            u2 * ((1.0 - be) * f1[0] + be * f2[0]),
                            u2 * ((1.0 - be) * f1[1] + be * f2[1]),
                        ];
                        let r = norm(&sub(&a, &b));
                        let k = ww * wa * wb * w * r.powf(-sigma);
                        let d = [
                            (1.0 - u1) - (1.0 - u2),
                            u1 * (1.0 - al),
                            u1 * al,
                            -u2 * (1.0 - be),
                            -u2 * be,
                        ];
                        for p in 0..5 {
                            for q in 0..5 {
                                acc[p][q] += d[p] * d[q] * k;
                            }
                        }
                    }
                }
            }
        }
        let scale = 4.0 * self.areas[e] * self.areas[f] / (4.0 - 2.0 * s);
        let mut blk = LocalBlock::new(vec![v, te[1], te[2], tf[1], tf[2]], (e, f));
        for p in 0..5 {
            for q in 0..5 {
                blk.add(p, q, scale * acc[p][q]);
            }
        }
        blk
    }

    fn edge_block(&self, e: usize, f: usize, v: usize, w: usize) -> LocalBlock {
        let s = self.s;
        let sigma = 2.0 + 2.0 * s;
        let third = |t: [usize; 3]| *t.iter().find(|&&x| x != v && x != w).expect("third vertex");
        let (p, pp) = (third(self.tris[e]), third(self.tris[f]));
        let pv = self.nodes[v];
        let ev = sub(&self.nodes[w], &pv);
        let pe = sub(&self.nodes[p], &pv);
        let pf = sub(&self.nodes[pp], &pv);
        // sub-triangles of {|d| + μ <= 1, μ >= 0}, split along the kinks of c
        const SUBS: [[[f64; 2]; 3]; 6] = [
            [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]],
            [[0.5, 0.0], [1.0, 0.0], [0.0, 1.0]],
            [[0.5, 0.0], [0.0, 1.0], [0.0, 0.5]],
            [[0.0, 0.0], [-1.0, 0.0], [-0.5, 0.5]],
            [[0.0, 0.0], [-0.5, 0.5], [0.0, 0.5]],
            [[-0.5, 0.5], [0.0, 0.5], [0.0, 1.0]],
        ];
        let mut acc = [[0.0; 4]; 4];
        for tri in &SUBS {
            let u = [tri[1][0] - tri[0][0], tri[1][1] - tri[0][1]];
            let z = [tri[2][0] - tri[0][0], tri[2][1] - tri[0][1]];
            let jac = cross(&u, &z).abs();
            for qp in &self.edge_rule {
                let d = tri[0][0] + qp.xi * u[0] + qp.eta * z[0];
                let mu = tri[0][1] + qp.xi * u[1] + qp.eta * z[1];
                let mup = 1.0 - d.abs() - mu;
                let c = mup.max(mu + d) + (-d).max(0.0);
                let r = [
                    d * ev[0] + mu * pe[0] - mup * pf[0],
                    d * ev[1] + mu * pe[1] - mup * pf[1],
                ];
                let k = qp.weight * jac * norm(&r).powf(-sigma) * c.powf(2.0 * s - 3.0);
                let dv = [-d - mu + mup, d, mu, -mup];
                for a in 0..4 {
                    for b in 0..4 {
                        acc[a][b] += dv[a] * dv[b] * k;
                    }
                }
            }
        }
        let scale = 4.0 * self.areas[e] * self.areas[f] / ((3.0 - 2.0 * s) * (4.0 - 2.0 * s));
        let mut blk = LocalBlock::new(vec![v, w, p, pp], (e, f));
        for a in 0..4 {
            for b in 0..4 {
                blk.add(a, b, scale * acc[a][b]);
            }
        }
        blk
    }

    fn separated_block(&self, e: usize, f: usize) -> LocalBlock {
        let sigma = 2.0 + 2.0 * self.s;
        let (te, tf) = (self.tris[e], self.tris[f]);
        let mut gap = f64::INFINITY;
        let mut size: f64 = 0.0;
        for &i in &te {
            for &j in &tf {
                gap = gap.min(norm(&sub(&self.nodes[i], &self.nodes[j])));
            }
        }
        for t in [te, tf] {
            for k in 0..3 {
                size = size.max(norm(&sub(&self.nodes[t[k]], &self.nodes[t[(k + 1) % 3]])));
            }
        }
        let ratio = gap / size;
        let rule = if ratio < 1.0 {
            &self.far_rules[3]
        } else if ratio < 2.0 {
            &self.far_rules[2]
        } else if ratio < 5.0 {
            &self.far_rules[1]
        } else {
            &self.far_rules[0]
        };
        let map = |t: [usize; 3], qp: &TrianglePoint| -> Point {
            let (a, b, c) = (self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]);
            [
                a[0] + qp.xi * (b[0] - a[0]) + qp.eta * (c[0] - a[0]),
                a[1] + qp.xi * (b[1] - a[1]) + qp.eta * (c[1] - a[1]),
            ]
        };
        let (ae, af) = (2.0 * self.areas[e], 2.0 * self.areas[f]);
        let mut acc = [[0.0; 6]; 6];
        for qx in rule {
            let x = map(te, qx);
            for qy in rule {
                let y = map(tf, qy);
                let k = qx.weight * qy.weight * ae * af * norm(&sub(&x, &y)).powf(-sigma);
                let d = [
                    1.0 - qx.xi - qx.eta,
                    qx.xi,
                    qx.eta,
                    -(1.0 - qy.xi - qy.eta),
                    -qy.xi,
                    -qy.eta,
                ];
                for a in 0..6 {
                    for b in 0..6 {
                        acc[a][b] += d[a] * d[b] * k;
                    }
                }
            }
        }
        let mut blk = LocalBlock::new(vec![te[0], te[1], te[2], tf[0], tf[1], tf[2]], (e, f));
        for a in 0..6 {
            for b in 0..6 {
                blk.add(a, b, acc[a][b]);
            }
        }
        blk
    }

    /// κ(x) = (1/2s) ∫ ρ(θ)^{−2s} dθ with ρ the distance from x to the
    /// polygon boundary in direction θ; each boundary edge at distance d
    /// contributes d^{−2s} ∫ cos^{2s}.
    fn kappa(&self, x: &Point) -> f64 {
        let s = self.s;
        let mut total = 0.0;
        for (p, q, n) in &self.bedges {
            let dp = sub(p, x);
            let dq = sub(q, x);
            let d = dot(&dp, n);
            let phi_p = cross(n, &dp).atan2(dot(n, &dp));
            let phi_q = cross(n, &dq).atan2(dot(n, &dq));
            let (lo, hi) = if phi_p < phi_q { (phi_p, phi_q) } else { (phi_q, phi_p) };
            let len = norm(&sub(q, p));
            let rule = if len < d { &self.kappa_coarse } else { &self.kappa_fine };
            let mut integral = 0.0;
            let pieces: &[(f64, f64)] = if lo < 0.0 && hi > 0.0 { &[(lo, 0.0), (0.0, hi)] } else { &[(lo, hi)] };
            for &(a, b) in pieces {
                integral += rule.integrate(a, b, |t| t.cos().powf(2.0 * s));
            }
            total += d.powf(-2.0 * s) * integral;
        }
        total / (2.0 * s)
    }

    fn add_complement(&self, e: usize, blk: &mut LocalBlock) {
        let t = self.tris[e];
        let rule = if self.touches_boundary[e] {
            &self.mass_rule_fine
        } else {
            &self.mass_rule
        };
        let (a, b, c) = (self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]);
        let jac = 2.0 * self.areas[e];
        for qp in rule {
            let x = [
                a[0] + qp.xi * (b[0] - a[0]) + qp.eta * (c[0] - a[0]),
                a[1] + qp.xi * (b[1] - a[1]) + qp.eta * (c[1] - a[1]),
            ];
            let k = self.kappa(&x) * qp.weight * jac;
            let l = [1.0 - qp.xi - qp.eta, qp.xi, qp.eta];
            for p in 0..3 {
                for q in 0..3 {
                    blk.add(p, q, l[p] * l[q] * k);
                }
            }
        }
    }
}
