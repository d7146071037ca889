//! Hermite data (edge crossing point and surface normal) estimated from the
//! grid samples alone, and its refinement from fitted vertex planes.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::grid::{CellId, EdgeId, Incidence, SdfGrid};
use crate::scalar::{Real, Vec3};

const DEGENERATE_NORMAL: f64 = 1e-12;
const DEGENERATE_SPREAD: f64 = 1e-12;
const PARALLEL_EDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteSample<T: Real> {
    pub edge: EdgeId,
    pub point: Vec3<T>,
    pub normal: Vec3<T>,
}

/// World-space endpoints of a grid edge.
pub fn edge_segment<T: Real>(grid: &SdfGrid<T>, edge: &EdgeId) -> (Vec3<T>, Vec3<T>) {
    (grid.node_position(edge.base), grid.node_position(edge.tip()))
}

/// Zero of the linear interpolant along an interesting edge:
/// `t = |s_a| / (|s_a| + |s_b|)`.
pub fn estimate_hermite_point<T: Real>(grid: &SdfGrid<T>, edge: &EdgeId) -> Result<Vec3<T>> {
    let sa = grid.snapped(edge.base);
    let sb = grid.snapped(edge.tip());
    if (sa < T::zero()) == (sb < T::zero()) {
        return Err(Error::NotInteresting);
    }
    let (ua, ub) = edge_segment(grid, edge);
    let t = sa.abs() / (sa.abs() + sb.abs());
    Ok(ua * (T::one() - t) + ub * t)
}

/// Normalized sum of the trilinear gradients of every incident cell,
/// evaluated at the Hermite point.
pub fn estimate_hermite_normal<T: Real>(
    grid: &SdfGrid<T>,
    h: &Vec3<T>,
    incident_cells: &[CellId],
) -> Result<Vec3<T>> {
    let mut sum = Vec3::zeros();
    for &c in incident_cells {
        sum += grid.trilinear_gradient(c, h)?;
    }
    let len = sum.norm();
    if !(len >= T::lit(DEGENERATE_NORMAL)) {
        return Err(Error::DegenerateNormal(len.as_f64()));
    }
    Ok(sum / len)
}

/// Normal used when the averaged trilinear gradient vanishes: the central
/// difference gradient at the edge endpoint closest to `h`, or the edge
/// direction pointing from the negative to the positive node.
pub fn fallback_normal<T: Real>(grid: &SdfGrid<T>, edge: &EdgeId, h: &Vec3<T>) -> Vec3<T> {
    let (ua, ub) = edge_segment(grid, edge);
    let node = if (h - ua).norm() <= (h - ub).norm() { edge.base } else { edge.tip() };
    let g = grid.node_gradient(node);
    let len = g.norm();
    if len >= T::lit(DEGENERATE_NORMAL) {
        return g / len;
    }
    let dir = (ub - ua).normalize();
    if grid.is_inside(edge.base) {
        dir
    } else {
        -dir
    }
}

/// Initial Hermite data for every interesting edge of `inc`.
pub fn initial_hermite<T: Real>(grid: &SdfGrid<T>, inc: &Incidence) -> Result<Vec<HermiteSample<T>>> {
    inc.edges
        .iter()
        .enumerate()
        .map(|(ei, edge)| {
            let point = estimate_hermite_point(grid, edge)?;
            let cells: Vec<CellId> = inc.edge_cells[ei].iter().flatten().map(|&c| inc.cells[c]).collect();
            let normal = match estimate_hermite_normal(grid, &point, &cells) {
                Ok(n) => n,
                Err(Error::DegenerateNormal(_)) => fallback_normal(grid, edge, &point),
                Err(e) => return Err(e),
            };
            Ok(HermiteSample {
                edge: *edge,
                point,
                normal,
            })
        })
        .collect()
}

/// Least-squares plane through `points`: returns `(unit normal, centroid)`.
///
/// Fails when the points do not span a plane (coincident or collinear).
pub fn fit_plane_pca<T: Real>(points: &[Vec3<T>]) -> Result<(Vec3<T>, Vec3<T>)> {
    if points.is_empty() {
        return Err(Error::DegenerateFit);
    }
    let n = T::of_usize(points.len());
    let centroid = points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let spread = cov.trace();
    if !(spread > T::zero()) || !spread.is_finite() {
        return Err(Error::DegenerateFit);
    }
    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues"));
    if eig.eigenvalues[order[1]] < T::lit(DEGENERATE_SPREAD) * spread {
        return Err(Error::DegenerateFit);
    }
    let normal = eig.eigenvectors.column(order[0]).into_owned().normalize();
    Ok((normal, centroid))
}

/// One refinement step of a Hermite sample from the cell vertices around
/// its edge.
///
/// The fitted plane's normal is flipped to agree with the previous normal;
/// the new point moves toward the plane/edge intersection (clamped to the
/// edge) by `w_u`, and the normal becomes `normalize(n_fit + w_u n_prev)`.
pub fn update_hermite<T: Real>(
    prev: &HermiteSample<T>,
    segment: (Vec3<T>, Vec3<T>),
    vertices: &[Vec3<T>],
    w_u: T,
) -> HermiteSample<T> {
    let Ok((mut n_fit, centroid)) = fit_plane_pca(vertices) else {
        return *prev;
    };
    if n_fit.dot(&prev.normal) < T::zero() {
        n_fit = -n_fit;
    }
    let (a, b) = segment;
    let dir = b - a;
    let len = dir.norm();
    let denom = n_fit.dot(&dir);
    let point = if len > T::zero() && (denom / len).abs() >= T::lit(PARALLEL_EDGE) {
        let s = (n_fit.dot(&(centroid - a)) / denom).max(T::zero()).min(T::one());
        let y = a + dir * s;
        prev.point + (y - prev.point) * w_u
    } else {
        prev.point
    };
    let blended = n_fit + prev.normal * w_u;
    let bl = blended.norm();
    let normal = if bl > T::lit(DEGENERATE_NORMAL) { blended / bl } else { prev.normal };
    HermiteSample {
        edge: prev.edge,
        point,
        normal,
    }
}
