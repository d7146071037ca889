//! Reference reconstructions: marching cubes and single-solve dual
//! contouring with estimated or exact Hermite data.

mod tables;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::contour::build_global_mesh;
use crate::error::{Error, Result};
use crate::grid::{find_interesting_cells, find_interesting_edges, Axis, EdgeId, Incidence, SdfGrid};
use crate::hermite::{edge_segment, fallback_normal, initial_hermite, HermiteSample};
use crate::mesh::{QuadMesh, TriMesh};
use crate::scalar::{Real, Vec3};
pub use crate::sdfgen::AnalyticSdf;

use tables::{CORNERS, EDGE_CORNERS, EDGE_TABLE, TRI_TABLE};

/// Relative eigenvalue cutoff used by the command-line baselines.
pub const DEFAULT_QEF_REG: f64 = 0.05;

/// Marching cubes on the `isovalue` level set, one vertex per crossed grid
/// edge (placed like the Hermite points), faces oriented outward.
pub fn marching_cubes<T: Real>(grid: &SdfGrid<T>, isovalue: T) -> TriMesh<T> {
    let shifted;
    let grid = if isovalue == T::zero() {
        grid
    } else {
        shifted = match grid.map_values(|v| v - isovalue) {
            Ok(g) => g,
            Err(_) => return TriMesh::empty(),
        };
        &shifted
    };
    let edges = find_interesting_edges(grid);
    let vertices: Vec<Vec3<T>> = edges
        .iter()
        .map(|e| {
            let (a, b) = edge_segment(grid, e);
            let sa = grid.snapped(e.base).abs();
            let sb = grid.snapped(e.tip()).abs();
            a + (b - a) * (sa / (sa + sb))
        })
        .collect();
    let [cx, cy, cz] = grid.cell_dims();
    let triangles: Vec<[usize; 3]> = (0..cx * cy * cz)
        .into_par_iter()
        .flat_map_iter(|flat| {
            let cell = [flat % cx, (flat / cx) % cy, flat / (cx * cy)];
            cell_triangles(grid, &edges, cell)
        })
        .collect();
    TriMesh::new(vertices, triangles)
}

fn cell_triangles<T: Real>(grid: &SdfGrid<T>, edges: &[EdgeId], cell: [usize; 3]) -> Vec<[usize; 3]> {
    let corner = |k: usize| [cell[0] + CORNERS[k][0], cell[1] + CORNERS[k][1], cell[2] + CORNERS[k][2]];
    let mut case = 0usize;
    for k in 0..8 {
        if grid.is_inside(corner(k)) {
            case |= 1 << k;
        }
    }
    if EDGE_TABLE[case] == 0 {
        return Vec::new();
    }
    let vertex_of = |local: usize| -> usize {
        let [a, b] = EDGE_CORNERS[local];
        let (pa, pb) = (corner(a), corner(b));
        let axis = (0..3).find(|&d| pa[d] != pb[d]).expect("cell edge spans one axis");
        let base = if pa[axis] < pb[axis] { pa } else { pb };
        edges
            .binary_search(&EdgeId::new(Axis::from_index(axis), base))
            .expect("table edges are interesting")
    };
    TRI_TABLE[case]
        .chunks(3)
        .take_while(|t| t[0] >= 0)
        // the table winds triangles clockwise seen from outside
        .map(|t| [vertex_of(t[0] as usize), vertex_of(t[2] as usize), vertex_of(t[1] as usize)])
        .collect()
}

/// Minimizer of `sum (n . (x - h))^2` closest to `centroid`: eigen-directions
/// of the normal matrix weaker than `reg * lambda_max` are left at the
/// centroid. `reg >= 1` returns the centroid.
pub fn solve_qef<T: Real>(planes: &[(Vec3<T>, Vec3<T>)], centroid: &Vec3<T>, reg: T) -> Vec3<T> {
    let mut a = Matrix3::zeros();
    let mut r = Vec3::zeros();
    for (h, n) in planes {
        a += n * n.transpose();
        r += n * n.dot(&(h - centroid));
    }
    let eig = a.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |m, &l| if l > m { l } else { m });
    if !(lmax > T::zero()) {
        return *centroid;
    }
    let mut x = *centroid;
    for k in 0..3 {
        let l = eig.eigenvalues[k];
        if l >= reg * lmax && l > T::zero() {
            let v = eig.eigenvectors.column(k).into_owned();
            x += v * (v.dot(&r) / l);
        }
    }
    x
}

fn dc_from_hermite<T: Real>(
    grid: &SdfGrid<T>,
    inc: &Incidence,
    hermite: &[HermiteSample<T>],
    reg: T,
) -> Result<QuadMesh<T>> {
    let vertices: Vec<Vec3<T>> = inc
        .cell_edges
        .par_iter()
        .map(|es| {
            let planes: Vec<(Vec3<T>, Vec3<T>)> = es.iter().map(|&e| (hermite[e].point, hermite[e].normal)).collect();
            let centroid = planes.iter().fold(Vec3::zeros(), |acc, (h, _)| acc + h) / T::of_usize(planes.len());
            solve_qef(&planes, &centroid, reg)
        })
        .collect();
    build_global_mesh(grid, inc, &vertices)
}

fn incidence<T: Real>(grid: &SdfGrid<T>) -> Result<Incidence> {
    let edges = find_interesting_edges(grid);
    if edges.is_empty() {
        return Err(Error::EmptySurface);
    }
    Ok(find_interesting_cells(grid, &edges))
}

/// One QEF solve per cell on Hermite data estimated from the grid.
pub fn dc_estimated<T: Real>(grid: &SdfGrid<T>, reg: T) -> Result<QuadMesh<T>> {
    let inc = incidence(grid)?;
    let hermite = initial_hermite(grid, &inc)?;
    dc_from_hermite(grid, &inc, &hermite, reg)
}

const BISECTION_STEPS: usize = 50;

/// Zero crossing of `sdf` along an interesting edge by bisection, with
/// the analytic normal there.
pub fn exact_hermite<T: Real, S: AnalyticSdf<T> + ?Sized>(
    sdf: &S,
    grid: &SdfGrid<T>,
    edge: &EdgeId,
) -> Result<HermiteSample<T>> {
    let (a, b) = edge_segment(grid, edge);
    let (fa, fb) = (sdf.value(&a), sdf.value(&b));
    let a_inside = grid.is_inside(edge.base);
    let b_inside = grid.is_inside(edge.tip());
    let agrees = |f: T, inside: bool| if inside { f <= T::zero() } else { f >= T::zero() };
    if !agrees(fa, a_inside) || !agrees(fb, b_inside) {
        return Err(Error::Consistency(format!(
            "sdf signs ({}, {}) disagree with the grid on edge {:?}",
            fa.as_f64(),
            fb.as_f64(),
            edge
        )));
    }
    // keep `lo` on the inside end
    let (mut lo, mut hi) = if a_inside { (a, b) } else { (b, a) };
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) * T::lit(0.5);
        if sdf.value(&mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let point = (lo + hi) * T::lit(0.5);
    let g = sdf.gradient(&point);
    let n = g.norm();
    let normal = if n > T::lit(1e-12) && n.is_finite() { g / n } else { fallback_normal(grid, edge, &point) };
    Ok(HermiteSample {
        edge: *edge,
        point,
        normal,
    })
}

/// One QEF solve per cell on Hermite data taken from an analytic SDF that
/// agrees with the grid.
pub fn dc_exact<T: Real, S: AnalyticSdf<T> + ?Sized>(sdf: &S, grid: &SdfGrid<T>, reg: T) -> Result<QuadMesh<T>> {
    let inc = incidence(grid)?;
    let hermite: Vec<HermiteSample<T>> = inc
        .edges
        .par_iter()
        .map(|e| exact_hermite(sdf, grid, e))
        .collect::<Result<_>>()?;
    dc_from_hermite(grid, &inc, &hermite, reg)
}
