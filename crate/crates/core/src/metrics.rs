//! Surface comparison metrics on sampled points.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SdfGrid;
use crate::mesh::{ClosestPointIndex, TriMesh};
use crate::scalar::{Real, Vec3};

pub const CSV_HEADER: &str = "shape,method,resolution,chamfer,hausdorff,edge_chamfer,sdf_energy,vertices,seconds";

/// `n` points distributed uniformly by area over the mesh. Depends only on
/// the mesh and the seed.
pub fn sample_surface<T: Real>(mesh: &TriMesh<T>, n: usize, seed: u64) -> Result<Vec<Vec3<T>>> {
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t).as_f64();
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::EmptyMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.gen::<f64>() * total;
        let t = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let s = r1.sqrt();
        let [a, b, c] = mesh.corners(t);
        out.push(a * T::lit(1.0 - s) + b * T::lit(s * (1.0 - r2)) + c * T::lit(s * r2));
    }
    Ok(out)
}

fn distances<T: Real>(points: &[Vec3<T>], index: &ClosestPointIndex<T>) -> Vec<T> {
    points.par_iter().map(|p| index.distance(p)).collect()
}

/// Chamfer and Hausdorff values computed on the same samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceDistances<T: Real> {
    pub chamfer: T,
    pub hausdorff: T,
}

/// Both directions of sampled point-to-mesh distances: chamfer is the
/// average of the two mean distances, Hausdorff the overall maximum.
pub fn surface_distances<T: Real>(a: &TriMesh<T>, b: &TriMesh<T>, n: usize, seed: u64) -> Result<SurfaceDistances<T>> {
    if n == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    let (ia, ib) = (ClosestPointIndex::build(a)?, ClosestPointIndex::build(b)?);
    let (sa, sb) = (sample_surface(a, n, seed)?, sample_surface(b, n, seed)?);
    let (da, db) = (distances(&sa, &ib), distances(&sb, &ia));
    let mean = |d: &[T]| d.iter().fold(T::zero(), |acc, &x| acc + x) / T::of_usize(d.len());
    let max = |d: &[T]| d.iter().fold(T::zero(), |acc, &x| if x > acc { x } else { acc });
    let (ma, mb) = (max(&da), max(&db));
    Ok(SurfaceDistances {
        chamfer: (mean(&da) + mean(&db)) * T::lit(0.5),
        hausdorff: if ma > mb { ma } else { mb },
    })
}

pub fn chamfer<T: Real>(a: &TriMesh<T>, b: &TriMesh<T>, n: usize, seed: u64) -> Result<T> {
    surface_distances(a, b, n, seed).map(|d| d.chamfer)
}

pub fn hausdorff<T: Real>(a: &TriMesh<T>, b: &TriMesh<T>, n: usize, seed: u64) -> Result<T> {
    surface_distances(a, b, n, seed).map(|d| d.hausdorff)
}

/// Edges shared by exactly two triangles whose normals differ by more than
/// `threshold_deg` degrees.
pub fn sharp_edges<T: Real>(mesh: &TriMesh<T>, threshold_deg: f64) -> Vec<[usize; 2]> {
    let mut faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            faces.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let cos_limit = threshold_deg.to_radians().cos();
    let mut out: Vec<[usize; 2]> = faces
        .into_iter()
        .filter(|(_, ts)| ts.len() == 2)
        .filter(|(_, ts)| {
            let (n0, n1) = (mesh.face_normal(ts[0]), mesh.face_normal(ts[1]));
            n0.norm() > T::zero() && n1.norm() > T::zero() && n0.dot(&n1).as_f64() < cos_limit
        })
        .map(|((a, b), _)| [a, b])
        .collect();
    out.sort_unstable();
    out
}

fn closest_on_segment<T: Real>(p: &Vec3<T>, a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    let d = b - a;
    let len2 = d.norm_squared();
    let s = if len2 > T::zero() {
        (d.dot(&(p - a)) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    a + d * s
}

fn nearest_on_segments<T: Real>(p: &Vec3<T>, segs: &[(Vec3<T>, Vec3<T>)]) -> (T, Vec3<T>) {
    let mut best = (T::max_value().unwrap_or(T::one()), *p);
    for (a, b) in segs {
        let q = closest_on_segment(p, a, b);
        let d = (q - p).norm();
        if d < best.0 {
            best = (d, q);
        }
    }
    best
}

fn segments<T: Real>(mesh: &TriMesh<T>, threshold_deg: f64) -> Vec<(Vec3<T>, Vec3<T>)> {
    sharp_edges(mesh, threshold_deg)
        .iter()
        .map(|&[a, b]| (mesh.vertices[a], mesh.vertices[b]))
        .collect()
}

/// Surface samples lying within `radius` of a sharp edge, each moved onto
/// the closest point of that edge.
pub fn edge_points<T: Real>(mesh: &TriMesh<T>, n: usize, threshold_deg: f64, radius: T, seed: u64) -> Result<Vec<Vec3<T>>> {
    let segs = segments(mesh, threshold_deg);
    let samples = sample_surface(mesh, n, seed)?;
    if segs.is_empty() {
        return Ok(Vec::new());
    }
    let snapped: Vec<Option<Vec3<T>>> = samples
        .par_iter()
        .map(|p| {
            let (d, q) = nearest_on_segments(p, &segs);
            (d <= radius).then_some(q)
        })
        .collect();
    Ok(snapped.into_iter().flatten().collect())
}

fn mean_to_segments<T: Real>(points: &[Vec3<T>], segs: &[(Vec3<T>, Vec3<T>)]) -> T {
    let d: Vec<T> = points.par_iter().map(|p| nearest_on_segments(p, segs).0).collect();
    d.iter().fold(T::zero(), |acc, &x| acc + x) / T::of_usize(d.len())
}

/// Chamfer distance between the sharp features of two meshes.
///
/// Surface samples within `radius` of an edge whose dihedral angle deviates
/// from flat by more than `threshold_deg` are kept and snapped onto that
/// edge; the result averages, over both directions, the mean distance from
/// one mesh's kept points to the other mesh's sharp edges. If either mesh
/// keeps no sample the result is the largest extent of the two meshes'
/// common bounding box.
pub fn edge_chamfer<T: Real>(
    a: &TriMesh<T>,
    b: &TriMesh<T>,
    n: usize,
    threshold_deg: f64,
    radius: T,
    seed: u64,
) -> Result<T> {
    let pa = edge_points(a, n, threshold_deg, radius, seed)?;
    let pb = edge_points(b, n, threshold_deg, radius, seed)?;
    if pa.is_empty() || pb.is_empty() {
        let (la, ha) = a.bounds().ok_or(Error::EmptyMesh)?;
        let (lb, hb) = b.bounds().ok_or(Error::EmptyMesh)?;
        return Ok((ha.sup(&hb) - la.inf(&lb)).max());
    }
    let (sa, sb) = (segments(a, threshold_deg), segments(b, threshold_deg));
    Ok((mean_to_segments(&pa, &sb) + mean_to_segments(&pb, &sa)) * T::lit(0.5))
}

/// Mean over all grid nodes of `(|s| - d(node, mesh))^2`.
pub fn sdf_energy<T: Real>(grid: &SdfGrid<T>, mesh: &TriMesh<T>) -> Result<T> {
    let index = ClosestPointIndex::build(mesh)?;
    let terms: Vec<T> = (0..grid.node_count())
        .into_par_iter()
        .map(|i| {
            let r = grid.values()[i].abs() - index.distance(&grid.flat_position(i));
            r * r
        })
        .collect();
    Ok(terms.iter().fold(T::zero(), |acc, &x| acc + x) / T::of_usize(terms.len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub samples: usize,
    pub edge_samples: usize,
    pub dihedral_deg: f64,
    /// Sharp-edge sampling radius in grid spacings.
    pub edge_radius: f64,
    pub seed: u64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            samples: 20_000,
            edge_samples: 50_000,
            dihedral_deg: 30.0,
            edge_radius: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub chamfer: f64,
    pub hausdorff: f64,
    pub edge_chamfer: f64,
    pub sdf_energy: f64,
    pub samples: usize,
    pub edge_samples: usize,
    pub seed: u64,
}

/// All four metrics of `mesh` against `reference`, with the SDF energy
/// measured on `grid`.
pub fn evaluate<T: Real>(mesh: &TriMesh<T>, reference: &TriMesh<T>, grid: &SdfGrid<T>, opts: &MetricOptions) -> Result<MetricReport> {
    let d = surface_distances(mesh, reference, opts.samples, opts.seed)?;
    let radius = grid.spacing() * T::lit(opts.edge_radius);
    let e = edge_chamfer(mesh, reference, opts.edge_samples, opts.dihedral_deg, radius, opts.seed)?;
    Ok(MetricReport {
        chamfer: d.chamfer.as_f64(),
        hausdorff: d.hausdorff.as_f64(),
        edge_chamfer: e.as_f64(),
        sdf_energy: sdf_energy(grid, mesh)?.as_f64(),
        samples: opts.samples,
        edge_samples: opts.edge_samples,
        seed: opts.seed,
    })
}

/// One line of the metric CSV (without a trailing newline).
pub fn csv_row(shape: &str, method: &str, resolution: usize, report: &MetricReport, vertices: usize, seconds: f64) -> String {
    format!(
        "{shape},{method},{resolution},{:.9e},{:.9e},{:.9e},{:.9e},{vertices},{seconds:.3}",
        report.chamfer, report.hausdorff, report.edge_chamfer, report.sdf_energy
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdfgen::{box_mesh, sample_to_grid, sphere_mesh, Bounds, Shape};
    use nalgebra::{Rotation3, Vector3};

    fn square(z: f64) -> TriMesh<f64> {
        TriMesh::new(
            vec![Vec3::new(0.0, 0.0, z), Vec3::new(1.0, 0.0, z), Vec3::new(1.0, 1.0, z), Vec3::new(0.0, 1.0, z)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }

    fn cube(half: f64) -> TriMesh<f64> {
        box_mesh(Vec3::repeat(0.5), Vec3::repeat(half), &Rotation3::identity())
    }

    /// Cube of half extent `a` centered at 0.5 with all edges cut by `w`.
    fn beveled_cube(a: f64, w: f64) -> TriMesh<f64> {
        let mut verts = Vec::new();
        for &sx in &[-1.0, 1.0] {
            for &sy in &[-1.0, 1.0] {
                for &sz in &[-1.0, 1.0] {
                    let s = Vec3::new(sx, sy, sz);
                    for k in 0..3 {
                        let mut v = s * (a - w);
                        v[k] = s[k] * a;
                        verts.push(v);
                    }
                }
            }
        }
        let mut planes: Vec<(Vec3<f64>, f64)> = Vec::new();
        for k in 0..3 {
            for s in [-1.0, 1.0] {
                let mut n = Vec3::zeros();
                n[k] = s;
                planes.push((n, a));
            }
        }
        for (p, q) in [(0, 1), (1, 2), (0, 2)] {
            for sp in [-1.0, 1.0] {
                for sq in [-1.0, 1.0] {
                    let mut n = Vec3::zeros();
                    n[p] = sp;
                    n[q] = sq;
                    planes.push((n, 2.0 * a - w));
                }
            }
        }
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    planes.push((Vec3::new(sx, sy, sz), 3.0 * a - 2.0 * w));
                }
            }
        }
        let mut tris = Vec::new();
        for (n, off) in planes {
            let mut face: Vec<usize> = (0..verts.len()).filter(|&i| (n.dot(&verts[i]) - off).abs() < 1e-12).collect();
            let c = face.iter().fold(Vec3::zeros(), |acc, &i| acc + verts[i]) / face.len() as f64;
            let u = (verts[face[0]] - c).normalize();
            let v = n.normalize().cross(&u);
            face.sort_by(|&i, &j| {
                let (pi, pj) = (verts[i] - c, verts[j] - c);
                pi.dot(&v).atan2(pi.dot(&u)).total_cmp(&pj.dot(&v).atan2(pj.dot(&u)))
            });
            for k in 1..face.len() - 1 {
                tris.push([face[0], face[k], face[k + 1]]);
            }
        }
        TriMesh::new(verts.iter().map(|v| v + Vec3::repeat(0.5)).collect(), tris)
    }

    #[test]
    fn beveled_cube_is_a_closed_solid() {
        let m = beveled_cube(0.3, 0.05);
        assert_eq!(m.boundary_edge_count(), 0);
        assert!(m.signed_volume() > 0.0 && m.signed_volume() < 0.6f64.powi(3));
    }

    #[test]
    fn identical_meshes_are_zero() {
        let m = sphere_mesh(Vec3::repeat(0.5), 0.4, 2);
        let d = surface_distances(&m, &m, 2000, 3).unwrap();
        assert!(d.chamfer < 1e-12 && d.hausdorff < 1e-12);
        let c = cube(0.3);
        assert!(edge_chamfer(&c, &c, 4000, 30.0, 0.02, 1).unwrap() < 1e-9);
    }

    #[test]
    fn parallel_squares() {
        let delta = 0.1;
        let d = surface_distances(&square(0.0), &square(delta), 10_000, 7).unwrap();
        assert!((d.chamfer - delta).abs() < 0.02 * delta);
        assert!((d.hausdorff - delta).abs() < 0.02 * delta);
    }

    #[test]
    fn rigid_motion_invariance_and_symmetry() {
        let a = sphere_mesh(Vec3::repeat(0.5), 0.4, 2);
        let b = cube(0.3);
        let r = Rotation3::from_axis_angle(&Vector3::y_axis(), 0.7);
        let t = Vec3::new(0.3, -1.0, 2.0);
        let move_it = |m: &TriMesh<f64>| m.map_vertices(|v| r * v + t);
        let d0 = chamfer(&a, &b, 3000, 5).unwrap();
        let d1 = chamfer(&move_it(&a), &move_it(&b), 3000, 5).unwrap();
        assert!((d0 - d1).abs() < 1e-9);
        assert_eq!(d0, chamfer(&b, &a, 3000, 5).unwrap());
        assert_eq!(hausdorff(&a, &b, 3000, 5).unwrap(), hausdorff(&b, &a, 3000, 5).unwrap());
    }

    #[test]
    fn chamfer_never_exceeds_hausdorff() {
        for seed in 0..10 {
            let a = sphere_mesh(Vec3::repeat(0.5), 0.3 + 0.01 * seed as f64, 1);
            let b = cube(0.25);
            let d = surface_distances(&a, &b, 500, seed).unwrap();
            assert!(d.chamfer <= d.hausdorff);
        }
    }

    #[test]
    fn spike_raises_hausdorff() {
        let a = square(0.0);
        let mut spiky = a.clone();
        spiky.vertices.extend([Vec3::new(0.4, 0.4, 0.0), Vec3::new(0.6, 0.4, 0.0), Vec3::new(0.5, 0.5, 2.0)]);
        spiky.triangles.push([4, 5, 6]);
        let b = square(0.05);
        assert!(hausdorff(&spiky, &b, 5000, 1).unwrap() > hausdorff(&a, &b, 5000, 1).unwrap());
    }

    #[test]
    fn empty_mesh_is_an_error() {
        let e = TriMesh::<f64>::empty();
        assert!(matches!(chamfer(&e, &square(0.0), 10, 0), Err(Error::EmptyMesh)));
    }

    #[test]
    fn sphere_has_no_sharp_edges_so_penalty() {
        let c = cube(0.3);
        let s = sphere_mesh(Vec3::repeat(0.5), 0.3, 3);
        let v = edge_chamfer(&c, &s, 4000, 30.0, 0.02, 0).unwrap();
        assert!((v - 0.6).abs() < 1e-12);
        assert!(v >= 0.1 * 0.6 * 3f64.sqrt());
    }

    #[test]
    fn coplanar_retriangulation_keeps_edges() {
        let c = cube(0.3);
        let mut verts = c.vertices.clone();
        let mut tris = Vec::new();
        for pair in c.triangles.chunks(2) {
            let [a, b, q] = pair[0];
            let d = pair[1][2];
            let m = verts.len();
            verts.push((verts[a] + verts[b] + verts[q] + verts[d]) / 4.0);
            tris.extend([[a, b, m], [b, q, m], [q, d, m], [d, a, m]]);
        }
        let fan = TriMesh::new(verts, tris);
        assert_eq!(sharp_edges(&fan, 30.0).len(), 12);
        assert!(edge_chamfer(&c, &fan, 8000, 30.0, 0.02, 5).unwrap() < 1e-12);
    }

    #[test]
    fn bevel_sweep_is_monotone() {
        let c = cube(0.3);
        let values: Vec<f64> = [0.01, 0.02, 0.05]
            .iter()
            .map(|&w| edge_chamfer(&c, &beveled_cube(0.3, w), 20_000, 30.0, 0.02, 4).unwrap())
            .collect();
        assert!(values[0] < values[1] && values[1] < values[2], "{values:?}");
    }

    #[test]
    fn sdf_energy_oracles() {
        let shape = Shape::sphere(Vec3::repeat(0.5), 0.35);
        let g = sample_to_grid(&shape, [32, 32, 32], &Bounds::unit()).unwrap();
        let fine = sphere_mesh(Vec3::repeat(0.5), 0.35, 5);
        let e = sdf_energy(&g, &fine).unwrap();
        assert!(e < (0.01 * g.spacing()).powi(2), "{e}");
        let shifted = fine.map_vertices(|v| v + Vec3::repeat(g.spacing()));
        assert!(sdf_energy(&g, &shifted).unwrap() > e);

        let plane = Shape::cuboid(Vec3::new(0.5, 0.5, -50.0), Vec3::new(1e3, 1e3, 50.4));
        let g = sample_to_grid(&plane, [6, 6, 6], &Bounds::unit()).unwrap();
        let sheet = TriMesh::new(
            vec![Vec3::new(-1e3, -1e3, 0.4), Vec3::new(1e3, -1e3, 0.4), Vec3::new(0.0, 1e3, 0.4)],
            vec![[0, 1, 2]],
        );
        assert!(sdf_energy(&g, &sheet).unwrap() < 1e-12);
    }

    #[test]
    fn csv_row_layout() {
        let r = MetricReport {
            chamfer: 0.001,
            hausdorff: 0.01,
            edge_chamfer: 0.002,
            sdf_energy: 1e-6,
            samples: 10,
            edge_samples: 10,
            seed: 0,
        };
        let row = csv_row("cube", "ours", 32, &r, 1234, 0.5);
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("cube,ours,32,1.000000000e-3,"));
        assert!(row.ends_with(",1234,0.500"));
    }
}
