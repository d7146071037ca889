//! Global quad mesh assembly, face intersection points and the per-cell
//! local meshes used by the inner optimization.

use crate::error::{Error, Result};
use crate::grid::{CellId, Incidence, SdfGrid};
use crate::hermite::HermiteSample;
use crate::mesh::{closest_point_on_triangle, QuadMesh, TriMesh};
use crate::scalar::{Real, Vec3};

/// Cells around interesting edge `e`, ordered so that the quad they form
/// winds counter-clockwise when seen from the edge's positive endpoint.
pub fn oriented_ring<T: Real>(grid: &SdfGrid<T>, inc: &Incidence, e: usize) -> [Option<usize>; 4] {
    let ring = inc.edge_cells[e];
    if grid.is_inside(inc.edges[e].tip()) {
        [ring[3], ring[2], ring[1], ring[0]]
    } else {
        ring
    }
}

/// Connects the cell vertices around every interior interesting edge into a
/// quad. `vertices[c]` is the vertex of cell `inc.cells[c]`.
pub fn build_global_mesh<T: Real>(grid: &SdfGrid<T>, inc: &Incidence, vertices: &[Vec3<T>]) -> Result<QuadMesh<T>> {
    if vertices.len() != inc.cells.len() {
        return Err(Error::Consistency(format!(
            "{} cell vertices supplied for {} interesting cells",
            vertices.len(),
            inc.cells.len()
        )));
    }
    let mut quads = Vec::new();
    let mut quad_edges = Vec::new();
    for e in 0..inc.edges.len() {
        if let [Some(a), Some(b), Some(c), Some(d)] = oriented_ring(grid, inc, e) {
            quads.push([a, b, c, d]);
            quad_edges.push(inc.edges[e]);
        }
    }
    Ok(QuadMesh {
        vertices: vertices.to_vec(),
        quads,
        quad_edges,
    })
}

/// Crossing of a global mesh edge with the grid face between two cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceIntersection<T: Real> {
    pub point: Vec3<T>,
    /// Index of the interesting edge whose quad spawned the crossing; its
    /// Hermite point is the relevant Hermite point.
    pub relevant_edge: usize,
    pub cell: usize,
    pub neighbor: usize,
    /// True when `neighbor` follows `cell` in the quad's winding.
    pub leading: bool,
}

/// Point where segment `x_a -> x_b` meets the grid face shared by the
/// face-adjacent cells `a` and `b`. When the segment misses the face plane
/// the segment midpoint projected onto it is used; either way the point is
/// clamped to the face square.
pub fn face_crossing<T: Real>(grid: &SdfGrid<T>, a: CellId, b: CellId, xa: &Vec3<T>, xb: &Vec3<T>) -> Vec3<T> {
    let axis = (0..3)
        .find(|&d| a.0[d] != b.0[d])
        .expect("face-adjacent cells differ along one axis");
    let h = grid.spacing();
    let plane = grid.origin()[axis] + T::of_usize(a.0[axis].max(b.0[axis])) * h;
    let denom = xb[axis] - xa[axis];
    let t = if denom != T::zero() { (plane - xa[axis]) / denom } else { -T::one() };
    let mut p = if t >= T::zero() && t <= T::one() {
        xa + (xb - xa) * t
    } else {
        (xa + xb) * T::lit(0.5)
    };
    p[axis] = plane;
    for d in (0..3).filter(|&d| d != axis) {
        let lo = grid.origin()[d] + T::of_usize(a.0[d]) * h;
        p[d] = p[d].max(lo).min(lo + h);
    }
    p
}

/// Face intersection points of every global-mesh edge leaving the vertex of
/// cell `cell`, grouped by relevant edge (leading neighbor first).
pub fn compute_face_intersections<T: Real>(
    grid: &SdfGrid<T>,
    inc: &Incidence,
    cell: usize,
    vertices: &[Vec3<T>],
) -> Vec<FaceIntersection<T>> {
    face_intersections_at(grid, inc, cell, &vertices[cell], vertices)
}

/// As [`compute_face_intersections`], with the vertex of `cell` placed at
/// `x` instead of `vertices[cell]`.
pub fn face_intersections_at<T: Real>(
    grid: &SdfGrid<T>,
    inc: &Incidence,
    cell: usize,
    x: &Vec3<T>,
    vertices: &[Vec3<T>],
) -> Vec<FaceIntersection<T>> {
    let mut out = Vec::with_capacity(2 * inc.cell_edges[cell].len());
    for &e in &inc.cell_edges[cell] {
        let ring = oriented_ring(grid, inc, e);
        let pos = ring
            .iter()
            .position(|&c| c == Some(cell))
            .expect("cell lies in the ring of its own edge");
        for (offset, leading) in [(1, true), (3, false)] {
            if let Some(n) = ring[(pos + offset) % 4] {
                let point = face_crossing(grid, inc.cells[cell], inc.cells[n], x, &vertices[n]);
                out.push(FaceIntersection {
                    point,
                    relevant_edge: e,
                    cell,
                    neighbor: n,
                    leading,
                });
            }
        }
    }
    out
}

/// Triangle fan around a cell vertex (vertex 0) through face intersection
/// points and Hermite points.
#[derive(Debug, Clone)]
pub struct LocalMesh<T: Real> {
    pub mesh: TriMesh<T>,
    /// Open-edge bits per triangle, see [`TriMesh::open_edge_mask`].
    pub open_mask: Vec<u8>,
}

impl<T: Real> LocalMesh<T> {
    /// Moves the cell vertex; face intersections and Hermite points stay put.
    pub fn set_vertex(&mut self, x: Vec3<T>) {
        self.mesh.vertices[0] = x;
    }

    pub fn vertex(&self) -> Vec3<T> {
        self.mesh.vertices[0]
    }

    /// Exact closest point by exhaustive search (local meshes hold at most
    /// two dozen triangles).
    pub fn closest(&self, p: &Vec3<T>) -> Option<(Vec3<T>, usize, [T; 3])> {
        let mut best: Option<(T, Vec3<T>, usize, [T; 3])> = None;
        for t in 0..self.mesh.triangles.len() {
            let [a, b, c] = self.mesh.corners(t);
            let (q, w) = closest_point_on_triangle(p, &a, &b, &c);
            let d2 = (q - p).norm_squared();
            if best.as_ref().is_none_or(|(bd, ..)| d2 < *bd) {
                best = Some((d2, q, t, w));
            }
        }
        best.map(|(_, q, t, w)| (q, t, w))
    }
}

/// For every interesting edge of the cell: triangles `(x, p_lead, h)` and
/// `(x, h, p_trail)`; a single triangle when only one crossing exists.
pub fn build_local_mesh<T: Real>(
    x: Vec3<T>,
    inc: &Incidence,
    cell: usize,
    hermite: &[HermiteSample<T>],
    fis: &[FaceIntersection<T>],
) -> LocalMesh<T> {
    let mut vertices = vec![x];
    let mut triangles = Vec::new();
    let mut neighbor_vertex: Vec<(usize, usize)> = Vec::new();
    let mut vertex_of = |n: usize, p: Vec3<T>, vertices: &mut Vec<Vec3<T>>| -> usize {
        if let Some(&(_, v)) = neighbor_vertex.iter().find(|(m, _)| *m == n) {
            return v;
        }
        vertices.push(p);
        neighbor_vertex.push((n, vertices.len() - 1));
        vertices.len() - 1
    };
    for &e in &inc.cell_edges[cell] {
        let lead = fis.iter().find(|f| f.relevant_edge == e && f.cell == cell && f.leading);
        let trail = fis.iter().find(|f| f.relevant_edge == e && f.cell == cell && !f.leading);
        if lead.is_none() && trail.is_none() {
            continue;
        }
        vertices.push(hermite[e].point);
        let h = vertices.len() - 1;
        if let Some(f) = lead {
            let p = vertex_of(f.neighbor, f.point, &mut vertices);
            triangles.push([0, p, h]);
        }
        if let Some(f) = trail {
            let p = vertex_of(f.neighbor, f.point, &mut vertices);
            triangles.push([0, h, p]);
        }
    }
    let mesh = TriMesh::new(vertices, triangles);
    let open_mask = mesh.open_edge_mask();
    LocalMesh { mesh, open_mask }
}
