//! Uniform triangulations of the unit square.
//!
//! Every one of the `M × M` cells is split along its lower-left to
//! upper-right diagonal. Vertices are numbered row by row (`j * (M + 1) + i`
//! for column `i`, row `j`); edges are numbered in order of first appearance
//! while walking the triangles.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::ops::BitOr;

use crate::error::{MhdError, Result};

/// Set of sides of the unit square an entity lies on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Sides(u8);

impl Sides {
    pub const INTERIOR: Sides = Sides(0);
    pub const BOTTOM: Sides = Sides(1);
    pub const RIGHT: Sides = Sides(2);
    pub const TOP: Sides = Sides(4);
    pub const LEFT: Sides = Sides(8);

    pub fn of_point(x: f64, y: f64) -> Sides {
        let mut s = Sides::INTERIOR;
        if y == 0.0 {
            s = s | Sides::BOTTOM;
        }
        if x == 1.0 {
            s = s | Sides::RIGHT;
        }
        if y == 1.0 {
            s = s | Sides::TOP;
        }
        if x == 0.0 {
            s = s | Sides::LEFT;
        }
        s
    }

    pub fn is_interior(self) -> bool {
        self.0 == 0
    }

    pub fn is_boundary(self) -> bool {
        self.0 != 0
    }

    pub fn contains(self, other: Sides) -> bool {
        self.0 & other.0 == other.0
    }

    /// Number of distinct sides (2 at a corner).
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// On `y = 0` or `y = 1`.
    pub fn on_horizontal(self) -> bool {
        self.0 & (Self::BOTTOM.0 | Self::TOP.0) != 0
    }

    /// On `x = 0` or `x = 1`.
    pub fn on_vertical(self) -> bool {
        self.0 & (Self::LEFT.0 | Self::RIGHT.0) != 0
    }

    pub fn intersection(self, other: Sides) -> Sides {
        Sides(self.0 & other.0)
    }
}

impl BitOr for Sides {
    type Output = Sides;

    fn bitor(self, rhs: Sides) -> Sides {
        Sides(self.0 | rhs.0)
    }
}

impl fmt::Display for Sides {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_interior() {
            return f.write_str("interior");
        }
        let names = [
            (Sides::BOTTOM, "bottom"),
            (Sides::RIGHT, "right"),
            (Sides::TOP, "top"),
            (Sides::LEFT, "left"),
        ];
        let parts: Vec<&str> = names
            .iter()
            .filter(|(s, _)| self.contains(*s))
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&parts.join("+"))
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// Triangles sharing this edge; the second slot is `None` on the boundary.
    pub triangles: [Option<usize>; 2],
}

#[derive(Clone, Debug)]
pub struct Mesh {
    resolution: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    /// Local edge `k` of a triangle joins local vertices `k` and `(k + 1) % 3`.
    triangle_edges: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    vertex_sides: Vec<Sides>,
    edge_sides: Vec<Sides>,
}

impl Mesh {
    /// Builds the `M × M` uniform mesh of `[0,1]²` and classifies its boundary.
    pub fn uniform(m: usize) -> Result<Mesh> {
        if m == 0 {
            return Err(MhdError::InvalidResolution(m));
        }
        let n = m + 1;
        let coord = |i: usize| i as f64 / m as f64;

        let mut vertices = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                vertices.push([coord(i), coord(j)]);
            }
        }

        let mut triangles = Vec::with_capacity(2 * m * m);
        for j in 0..m {
            for i in 0..m {
                let a = j * n + i;
                let b = a + 1;
                let c = a + n + 1;
                let d = a + n;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * m * m + 2 * m);
        let mut edges: Vec<Edge> = Vec::with_capacity(3 * m * m + 2 * m);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for k in 0..3 {
                let (p, q) = (tri[k], tri[(k + 1) % 3]);
                let key = (p.min(q), p.max(q));
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        triangles: [None, None],
                    });
                    edges.len() - 1
                });
                let slot = &mut edges[e].triangles;
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else {
                    slot[1] = Some(t);
                }
                local[k] = e;
            }
            triangle_edges.push(local);
        }

        let mut mesh = Mesh {
            resolution: m,
            vertices,
            triangles,
            triangle_edges,
            edges,
            vertex_sides: Vec::new(),
            edge_sides: Vec::new(),
        };
        mesh.classify_boundary();
        Ok(mesh)
    }

    /// Tags every vertex and edge with the sides of the square it lies on.
    fn classify_boundary(&mut self) {
        self.vertex_sides = self
            .vertices
            .iter()
            .map(|&[x, y]| Sides::of_point(x, y))
            .collect();
        self.edge_sides = self
            .edges
            .iter()
            .map(|e| {
                self.vertex_sides[e.vertices[0]].intersection(self.vertex_sides[e.vertices[1]])
            })
            .collect();
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Largest triangle diameter, `√2 / M`.
    pub fn h(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.resolution as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_sides(&self) -> &[Sides] {
        &self.vertex_sides
    }

    pub fn edge_sides(&self) -> &[Sides] {
        &self.edge_sides
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area; positive for counter-clockwise vertex order.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_coords(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Plain-text listing for debugging; not a stable format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, [x, y]) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "vertex {i} {x} {y}");
        }
        for (j, [a, b, c]) in self.triangles.iter().enumerate() {
            let _ = writeln!(out, "tri {j} {a} {b} {c}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_mesh() {
        let mesh = Mesh::uniform(1).unwrap();
        assert_eq!(mesh.num_vertices(), 4);
        assert_eq!(mesh.num_triangles(), 2);
        assert_eq!(mesh.num_edges(), 5);
    }

    #[test]
    fn counts_for_m4() {
        let mesh = Mesh::uniform(4).unwrap();
        assert_eq!(mesh.num_vertices(), 25);
        assert_eq!(mesh.num_triangles(), 32);
        assert_eq!(mesh.num_edges(), 56);
        // Euler: V - E + (F + outer face) = 2
        assert_eq!(25 - 56 + 33, 2);
        assert!((mesh.h() - 0.353553).abs() < 1e-6);
    }

    #[test]
    fn rejects_zero_resolution() {
        assert!(matches!(Mesh::uniform(0), Err(MhdError::InvalidResolution(0))));
    }

    #[test]
    fn boundary_tags_m2() {
        let mesh = Mesh::uniform(2).unwrap();
        let sides = mesh.vertex_sides();
        assert_eq!(sides.iter().filter(|s| s.is_boundary()).count(), 8);
        assert_eq!(sides.iter().filter(|s| s.is_interior()).count(), 1);
        assert_eq!(sides[0], Sides::BOTTOM | Sides::LEFT);
        assert_eq!(sides[4], Sides::INTERIOR);
        assert_eq!(mesh.vertices()[4], [0.5, 0.5]);
        assert_eq!(sides[0].to_string(), "bottom+left");
    }

    #[test]
    fn corners_have_two_sides() {
        for m in 1..6 {
            let mesh = Mesh::uniform(m).unwrap();
            for (v, s) in mesh.vertex_sides().iter().enumerate() {
                let [x, y] = mesh.vertices()[v];
                let corner = (x == 0.0 || x == 1.0) && (y == 0.0 || y == 1.0);
                if corner {
                    assert_eq!(s.count(), 2);
                } else if s.is_boundary() {
                    assert_eq!(s.count(), 1);
                }
            }
        }
    }

    #[test]
    fn areas_and_edge_counts() {
        for m in 1..=64 {
            let mesh = Mesh::uniform(m).unwrap();
            assert_eq!(mesh.num_edges(), 3 * m * m + 2 * m);
            // compensated sum, so only the per-triangle rounding is measured
            let (mut total, mut comp) = (0.0f64, 0.0f64);
            for t in 0..mesh.num_triangles() {
                let a = mesh.signed_area(t);
                let s = total + a;
                comp += if total.abs() >= a.abs() { (total - s) + a } else { (a - s) + total };
                total = s;
            }
            total += comp;
            assert!((total - 1.0).abs() < 1e-14, "m={m} area={total}");
            assert!((0..mesh.num_triangles()).all(|t| mesh.signed_area(t) > 0.0));
        }
    }

    #[test]
    fn edge_adjacency_matches_boundary() {
        for m in [1, 2, 5, 8] {
            let mesh = Mesh::uniform(m).unwrap();
            for (e, edge) in mesh.edges().iter().enumerate() {
                let shared = edge.triangles.iter().flatten().count();
                if mesh.edge_sides()[e].is_boundary() {
                    assert_eq!(shared, 1);
                } else {
                    assert_eq!(shared, 2);
                }
            }
            let boundary = mesh.edge_sides().iter().filter(|s| s.is_boundary()).count();
            assert_eq!(boundary, 4 * m);
        }
    }

    #[test]
    fn conforming() {
        // Two triangles sharing two vertices must share the edge between them.
        let mesh = Mesh::uniform(4).unwrap();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for k in 0..3 {
                let e = mesh.triangle_edges()[t][k];
                let mut ev = mesh.edges()[e].vertices;
                ev.sort();
                let mut tv = [tri[k], tri[(k + 1) % 3]];
                tv.sort();
                assert_eq!(ev, tv);
            }
        }
    }

    #[test]
    fn dump_lists_everything() {
        let mesh = Mesh::uniform(1).unwrap();
        let text = mesh.dump();
        assert!(text.starts_with("vertex 0 0 0\n"));
        assert!(text.contains("tri 1 0 3 2"));
        assert_eq!(text.lines().count(), 6);
    }
}
