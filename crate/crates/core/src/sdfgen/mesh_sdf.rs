use rayon::prelude::*;

use super::Bounds;
use crate::error::{Error, Result};
use crate::grid::SdfGrid;
use crate::mesh::{ClosestPointIndex, TriMesh};
use crate::scalar::Vec3;

const PERTURBATION: f64 = 1e-7;
const MAX_RETRIES: usize = 8;

/// Signed distance to a watertight triangle mesh: unsigned distance from a
/// closest-point index, sign from the parity of crossings of a ray along
/// `+x`.
#[derive(Debug, Clone)]
pub struct MeshSdf {
    mesh: TriMesh<f64>,
    index: ClosestPointIndex<f64>,
    diagonal: f64,
}

enum Crossing {
    Hit(f64),
    Miss,
    Ambiguous,
}

/// Where the line `{(x, y, z) : x free}` crosses the triangle.
fn line_crossing(tri: &[Vec3<f64>; 3], y: f64, z: f64) -> Crossing {
    let [a, b, c] = tri;
    let orient = |p: &Vec3<f64>, q: &Vec3<f64>| (p.y - y) * (q.z - z) - (p.z - z) * (q.y - y);
    let e0 = orient(b, c);
    let e1 = orient(c, a);
    let e2 = orient(a, b);
    let sum = e0 + e1 + e2;
    let scale = e0.abs() + e1.abs() + e2.abs();
    if scale == 0.0 {
        // the line passes through every vertex projection
        return Crossing::Ambiguous;
    }
    if sum.abs() <= 1e-14 * scale {
        // triangle parallel to the line: its neighbors decide
        return Crossing::Miss;
    }
    let eps = 1e-12 * scale;
    let neg = [e0, e1, e2].iter().any(|&e| e < -eps);
    let pos = [e0, e1, e2].iter().any(|&e| e > eps);
    if neg && pos {
        return Crossing::Miss;
    }
    if [e0, e1, e2].iter().any(|&e| e.abs() <= eps) {
        return Crossing::Ambiguous;
    }
    Crossing::Hit((e0 * a.x + e1 * b.x + e2 * c.x) / sum)
}

impl MeshSdf {
    /// Fails when the mesh is empty or has boundary edges.
    pub fn new(mesh: TriMesh<f64>) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let open = mesh.boundary_edge_count();
        if open > 0 {
            return Err(Error::NotWatertight(open));
        }
        let index = ClosestPointIndex::build(&mesh)?;
        let (lo, hi) = mesh.bounds().ok_or(Error::EmptyMesh)?;
        Ok(MeshSdf {
            mesh,
            index,
            diagonal: (hi - lo).norm(),
        })
    }

    pub fn mesh(&self) -> &TriMesh<f64> {
        &self.mesh
    }

    /// Sorted `x` coordinates where the line through `(y, z)` crosses the
    /// mesh; `None` if some crossing grazes an edge or vertex.
    fn crossings(&self, y: f64, z: f64) -> Option<Vec<f64>> {
        let mut xs = Vec::new();
        for t in 0..self.mesh.triangles.len() {
            let tri = self.mesh.corners(t);
            let (lo_y, hi_y) = (tri[0].y.min(tri[1].y).min(tri[2].y), tri[0].y.max(tri[1].y).max(tri[2].y));
            let (lo_z, hi_z) = (tri[0].z.min(tri[1].z).min(tri[2].z), tri[0].z.max(tri[1].z).max(tri[2].z));
            if y < lo_y || y > hi_y || z < lo_z || z > hi_z {
                continue;
            }
            match line_crossing(&tri, y, z) {
                Crossing::Hit(x) => xs.push(x),
                Crossing::Miss => {}
                Crossing::Ambiguous => return None,
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        Some(xs)
    }

    /// Crossings of the line through `(y, z)`, nudged up to eight times
    /// when the line grazes an edge.
    fn robust_crossings(&self, y: f64, z: f64) -> Option<Vec<f64>> {
        let step = PERTURBATION * self.diagonal;
        for attempt in 0..=MAX_RETRIES {
            let (dy, dz) = if attempt == 0 {
                (0.0, 0.0)
            } else {
                let a = attempt as f64 * 2.399_963;
                (step * attempt as f64 * a.cos(), step * attempt as f64 * a.sin())
            };
            if let Some(xs) = self.crossings(y + dy, z + dz) {
                return Some(xs);
            }
        }
        None
    }

    fn is_inside(xs: &[f64], x: f64) -> bool {
        xs.iter().filter(|&&h| h > x).count() % 2 == 1
    }

    pub fn signed_distance(&self, p: &Vec3<f64>) -> Result<f64> {
        let d = self.index.distance(p);
        let xs = self.robust_crossings(p.y, p.z).ok_or(Error::ParityInconclusive(0))?;
        Ok(if Self::is_inside(&xs, p.x) { -d } else { d })
    }

    /// Grid of signed distances; one crossing list per `x` row.
    pub fn sample_grid(&self, dims: [usize; 3], bounds: &Bounds) -> Result<SdfGrid<f64>> {
        let (origin, h) = bounds.grid_frame(dims)?;
        let rows: Vec<Result<Vec<f64>>> = (0..dims[1] * dims[2])
            .into_par_iter()
            .map(|row| {
                let (j, k) = (row % dims[1], row / dims[1]);
                let y = origin.y + j as f64 * h;
                let z = origin.z + k as f64 * h;
                let xs = self
                    .robust_crossings(y, z)
                    .ok_or(Error::ParityInconclusive(dims[0] * row))?;
                Ok((0..dims[0])
                    .map(|i| {
                        let p = Vec3::new(origin.x + i as f64 * h, y, z);
                        let d = self.index.distance(&p);
                        if Self::is_inside(&xs, p.x) {
                            -d
                        } else {
                            d
                        }
                    })
                    .collect())
            })
            .collect();
        let mut values = Vec::with_capacity(dims.iter().product());
        for r in rows {
            values.extend(r?);
        }
        SdfGrid::new(dims, origin, h, values)
    }
}

/// Signed distance grid of a watertight mesh.
pub fn mesh_to_sdf(mesh: &TriMesh<f64>, dims: [usize; 3], bounds: &Bounds) -> Result<SdfGrid<f64>> {
    MeshSdf::new(mesh.clone())?.sample_grid(dims, bounds)
}
