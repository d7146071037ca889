//! Indexed surface meshes, closest-point queries and OBJ I/O.

mod bvh;
mod obj;

pub use bvh::{closest_point_on_triangle, ClosestHit, ClosestPointIndex};
pub use obj::{parse_obj, read_obj, write_obj, write_obj_string, PolyMesh};

use std::collections::HashMap;

use crate::grid::EdgeId;
use crate::scalar::{Real, Vec3};

/// Quad mesh; each quad remembers the grid edge it was built around.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadMesh<T: Real> {
    pub vertices: Vec<Vec3<T>>,
    pub quads: Vec<[usize; 4]>,
    pub quad_edges: Vec<EdgeId>,
}

impl<T: Real> QuadMesh<T> {
    pub fn empty() -> Self {
        QuadMesh {
            vertices: Vec::new(),
            quads: Vec::new(),
            quad_edges: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    /// Sum of the areas of the two triangles of every quad (first diagonal).
    pub fn area(&self) -> T {
        triangulate_quads(self).area()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh<T: Real> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[usize; 3]>,
    /// Source quad of every triangle; empty when the mesh was not produced
    /// by [`triangulate_quads`].
    pub source_quad: Vec<usize>,
}

impl<T: Real> TriMesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[usize; 3]>) -> Self {
        TriMesh {
            vertices,
            triangles,
            source_quad: Vec::new(),
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    #[inline]
    pub fn corners(&self, t: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a)).norm() * T::lit(0.5)
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len()).fold(T::zero(), |acc, t| acc + self.triangle_area(t))
    }

    /// Unit face normal, or zero for degenerate triangles.
    pub fn face_normal(&self, t: usize) -> Vec3<T> {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a)).try_normalize(T::zero()).unwrap_or_else(Vec3::zeros)
    }

    /// Signed enclosed volume (positive for outward-oriented closed meshes).
    pub fn signed_volume(&self) -> T {
        let mut v = T::zero();
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            v += a.dot(&b.cross(&c));
        }
        v / T::lit(6.0)
    }

    /// Axis-aligned bounds `(min, max)`; `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Vec3<T>, Vec3<T>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }

    /// Undirected edge use counts, keyed by `(min, max)` vertex index.
    pub fn edge_valence(&self) -> HashMap<(usize, usize), usize> {
        let mut out = HashMap::with_capacity(self.triangles.len() * 3 / 2);
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *out.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        out
    }

    /// Per triangle, bit `k` is set when edge `(v_k, v_{k+1})` is used by
    /// this triangle only.
    pub fn open_edge_mask(&self) -> Vec<u8> {
        let valence = self.edge_valence();
        self.triangles
            .iter()
            .map(|tri| {
                let mut mask = 0u8;
                for k in 0..3 {
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    if valence[&(a.min(b), a.max(b))] == 1 {
                        mask |= 1 << k;
                    }
                }
                mask
            })
            .collect()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edge_valence().values().filter(|&&n| n == 1).count()
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&self, f: impl Fn(&Vec3<T>) -> Vec3<T>) -> Self {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            source_quad: self.source_quad.clone(),
        }
    }
}

/// Splits every quad `(a, b, c, d)` into `(a, b, c)` and `(a, c, d)`.
pub fn triangulate_quads<T: Real>(q: &QuadMesh<T>) -> TriMesh<T> {
    let mut triangles = Vec::with_capacity(q.quads.len() * 2);
    let mut source_quad = Vec::with_capacity(q.quads.len() * 2);
    for (qi, &[a, b, c, d]) in q.quads.iter().enumerate() {
        triangles.push([a, b, c]);
        triangles.push([a, c, d]);
        source_quad.push(qi);
        source_quad.push(qi);
    }
    TriMesh {
        vertices: q.vertices.clone(),
        triangles,
        source_quad,
    }
}

/// Whether a point with barycentric weights `bary` in a triangle with
/// open-edge bits `mask` lies on one of the open edges.
#[inline]
pub fn on_open_edge<T: Real>(bary: &[T; 3], mask: u8) -> bool {
    (0..3).any(|k| mask & (1 << k) != 0 && bary[(k + 2) % 3] == T::zero())
}
