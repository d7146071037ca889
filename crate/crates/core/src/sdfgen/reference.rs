use std::collections::HashMap;

use nalgebra::Rotation3;

use crate::mesh::TriMesh;
use crate::scalar::Vec3;

/// Closed, outward-oriented 12-triangle box.
pub fn box_mesh(center: Vec3<f64>, half: Vec3<f64>, rotation: &Rotation3<f64>) -> TriMesh<f64> {
    let vertices = (0..8)
        .map(|i| {
            let s = Vec3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            );
            center + rotation * s.component_mul(&half)
        })
        .collect();
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let triangles = quads.iter().flat_map(|&[a, b, c, d]| [[a, b, c], [a, c, d]]).collect();
    TriMesh::new(vertices, triangles)
}

/// Icosphere: an icosahedron split `subdivisions` times, vertices pushed
/// onto the sphere.
pub fn sphere_mesh(center: Vec3<f64>, radius: f64, subdivisions: usize) -> TriMesh<f64> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3<f64>>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    TriMesh::new(verts.iter().map(|v| center + v * radius).collect(), tris)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_is_closed_and_outward() {
        let r = Rotation3::from_axis_angle(&Vec3::z_axis(), 0.4);
        let m = box_mesh(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.5, 1.0, 1.5), &r);
        assert_eq!(m.boundary_edge_count(), 0);
        assert!((m.signed_volume() - 6.0).abs() < 1e-12);
        assert!((m.area() - 2.0 * (1.0 * 2.0 + 1.0 * 3.0 + 2.0 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn icosphere_is_closed_and_outward() {
        let m = sphere_mesh(Vec3::repeat(0.5), 0.4, 3);
        assert_eq!(m.triangles.len(), 20 * 64);
        assert_eq!(m.boundary_edge_count(), 0);
        assert!(m.edge_valence().values().all(|&n| n == 2));
        let v = m.signed_volume();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.4f64.powi(3);
        assert!(v > 0.0 && (v - exact).abs() < 0.02 * exact);
        assert!(m.vertices.iter().all(|p| ((p - Vec3::repeat(0.5)).norm() - 0.4).abs() < 1e-12));
    }
}
