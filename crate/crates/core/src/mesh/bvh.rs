//! Exact closest-point queries against a triangle mesh through a bounding
//! volume hierarchy.

use super::TriMesh;
use crate::error::{Error, Result};
use crate::scalar::{Real, Vec3};

const LEAF_SIZE: usize = 4;

/// Closest point on triangle `(a, b, c)` to `p` with its barycentric
/// weights. Points on an edge or vertex region get exact zero weights.
pub fn closest_point_on_triangle<T: Real>(p: &Vec3<T>, a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>) -> (Vec3<T>, [T; 3]) {
    let zero = T::zero();
    let one = T::one();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= zero && d2 <= zero {
        return (*a, [one, zero, zero]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= zero && d4 <= d3 {
        return (*b, [zero, one, zero]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [one - v, v, zero]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= zero && d5 <= d6 {
        return (*c, [zero, zero, one]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [one - w, zero, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [zero, one - w, w]);
    }
    let denom = va + vb + vc;
    if denom <= zero || !denom.is_finite() {
        // degenerate (zero area) triangle: fall back to the best edge
        let cands = [
            closest_on_segment(p, a, b),
            closest_on_segment(p, b, c),
            closest_on_segment(p, c, a),
        ];
        let mut best = 0;
        for k in 1..3 {
            if (cands[k].0 - p).norm_squared() < (cands[best].0 - p).norm_squared() {
                best = k;
            }
        }
        let (q, s) = cands[best];
        let mut bary = [zero; 3];
        bary[best] = one - s;
        bary[(best + 1) % 3] = s;
        return (q, bary);
    }
    let v = vb / denom;
    let w = vc / denom;
    (a + ab * v + ac * w, [one - v - w, v, w])
}

fn closest_on_segment<T: Real>(p: &Vec3<T>, a: &Vec3<T>, b: &Vec3<T>) -> (Vec3<T>, T) {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 <= T::zero() {
        return (*a, T::zero());
    }
    let s = (d.dot(&(p - a)) / len2).max(T::zero()).min(T::one());
    (a + d * s, s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit<T: Real> {
    pub point: Vec3<T>,
    pub triangle: usize,
    pub barycentric: [T; 3],
    pub distance: T,
}

#[derive(Debug, Clone)]
struct Node<T: Real> {
    min: Vec3<T>,
    max: Vec3<T>,
    // leaf: triangles order[start..start + count]; inner: children at
    // `start` and `start + 1` with count == 0
    start: usize,
    count: usize,
}

/// Bounding volume hierarchy over the triangles of a mesh.
#[derive(Debug, Clone)]
pub struct ClosestPointIndex<T: Real> {
    tris: Vec<[Vec3<T>; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

impl<T: Real> ClosestPointIndex<T> {
    pub fn build(mesh: &TriMesh<T>) -> Result<Self> {
        if mesh.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let tris: Vec<[Vec3<T>; 3]> = (0..mesh.triangles.len()).map(|t| mesh.corners(t)).collect();
        let centroids: Vec<Vec3<T>> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / T::lit(3.0)).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        nodes.push(Node {
            min: Vec3::zeros(),
            max: Vec3::zeros(),
            start: 0,
            count: 0,
        });
        let mut stack = vec![(0usize, 0usize, tris.len())];
        while let Some((node, lo, hi)) = stack.pop() {
            let (mut bmin, mut bmax) = (tris[order[lo]][0], tris[order[lo]][0]);
            let (mut cmin, mut cmax) = (centroids[order[lo]], centroids[order[lo]]);
            for &t in &order[lo..hi] {
                for v in &tris[t] {
                    bmin = bmin.inf(v);
                    bmax = bmax.sup(v);
                }
                cmin = cmin.inf(&centroids[t]);
                cmax = cmax.sup(&centroids[t]);
            }
            nodes[node].min = bmin;
            nodes[node].max = bmax;
            let extent = cmax - cmin;
            if hi - lo <= LEAF_SIZE || extent.max() <= T::zero() {
                nodes[node].start = lo;
                nodes[node].count = hi - lo;
                continue;
            }
            let axis = extent.imax();
            let mid = lo + (hi - lo) / 2;
            order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                centroids[a][axis]
                    .partial_cmp(&centroids[b][axis])
                    .expect("finite centroid")
                    .then(a.cmp(&b))
            });
            let left = nodes.len();
            let blank = Node {
                min: bmin,
                max: bmax,
                start: 0,
                count: 0,
            };
            nodes.push(blank.clone());
            nodes.push(blank);
            nodes[node].start = left;
            nodes[node].count = 0;
            stack.push((left, lo, mid));
            stack.push((left + 1, mid, hi));
        }
        Ok(ClosestPointIndex { tris, order, nodes })
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    fn box_distance2(node: &Node<T>, p: &Vec3<T>) -> T {
        let mut d2 = T::zero();
        for a in 0..3 {
            let v = if p[a] < node.min[a] {
                node.min[a] - p[a]
            } else if p[a] > node.max[a] {
                p[a] - node.max[a]
            } else {
                T::zero()
            };
            d2 += v * v;
        }
        d2
    }

    /// Exact closest point on the mesh. Ties go to the lowest triangle index.
    pub fn closest_point(&self, p: &Vec3<T>) -> ClosestHit<T> {
        let mut best_d2 = T::max_value().expect("bounded float");
        let mut best: Option<(Vec3<T>, usize, [T; 3])> = None;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if Self::box_distance2(node, p) > best_d2 {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = &self.tris[t];
                    let (q, bary) = closest_point_on_triangle(p, a, b, c);
                    let d2 = (q - p).norm_squared();
                    let better = match best {
                        None => true,
                        Some((_, bt, _)) => d2 < best_d2 || (d2 == best_d2 && t < bt),
                    };
                    if better {
                        best_d2 = d2;
                        best = Some((q, t, bary));
                    }
                }
            } else {
                let (l, r) = (node.start, node.start + 1);
                let dl = Self::box_distance2(&self.nodes[l], p);
                let dr = Self::box_distance2(&self.nodes[r], p);
                // nearer child on top
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        let (point, triangle, barycentric) = best.expect("index is never empty");
        ClosestHit {
            point,
            triangle,
            barycentric,
            distance: best_d2.sqrt(),
        }
    }

    pub fn distance(&self, p: &Vec3<T>) -> T {
        self.closest_point(p).distance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(mesh: &TriMesh<f64>, p: &Vec3<f64>) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.corners(t);
            let (q, _) = closest_point_on_triangle(p, &a, &b, &c);
            let d = (q - p).norm();
            if d < best.0 {
                best = (d, t);
            }
        }
        best
    }

    fn random_mesh(rng: &mut ChaCha8Rng, tris: usize) -> TriMesh<f64> {
        let mut verts = Vec::new();
        let mut faces = Vec::new();
        for t in 0..tris {
            let c = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            for _ in 0..3 {
                verts.push(c + Vec3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)));
            }
            faces.push([3 * t, 3 * t + 1, 3 * t + 2]);
        }
        TriMesh::new(verts, faces)
    }

    #[test]
    fn empty_mesh_is_rejected() {
        assert!(matches!(ClosestPointIndex::<f64>::build(&TriMesh::empty()), Err(Error::EmptyMesh)));
    }

    #[test]
    fn vertex_and_interior_queries() {
        let mesh = TriMesh::<f64>::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        );
        let idx = ClosestPointIndex::build(&mesh).unwrap();
        let hit = idx.closest_point(&Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(hit.distance, 0.0);
        assert_eq!(hit.point, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(hit.barycentric, [0.0, 1.0, 0.0]);

        let hit = idx.closest_point(&Vec3::new(0.2, 0.3, 0.7));
        assert!((hit.point - Vec3::new(0.2, 0.3, 0.0)).norm() < 1e-15);
        assert!((hit.distance - 0.7).abs() < 1e-15);
        let b = hit.barycentric;
        assert!((b[0] + b[1] + b[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn edge_regions_have_exact_zero_weights() {
        let (a, b, c) = (Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        let (_, w) = closest_point_on_triangle(&Vec3::new(0.4, -1.0, 0.3), &a, &b, &c);
        assert_eq!(w[2], 0.0);
        let (_, w) = closest_point_on_triangle(&Vec3::new(-1.0, 0.4, 0.3), &a, &b, &c);
        assert_eq!(w[1], 0.0);
        let (_, w) = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.3), &a, &b, &c);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn thousand_queries_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mesh = random_mesh(&mut rng, 300);
        let idx = ClosestPointIndex::build(&mesh).unwrap();
        for _ in 0..1000 {
            let p = Vec3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let hit = idx.closest_point(&p);
            let (d, _) = brute(&mesh, &p);
            assert!((hit.distance - d).abs() < 1e-12);
            let [a, b, c] = mesh.corners(hit.triangle);
            let w = hit.barycentric;
            let recon = a * w[0] + b * w[1] + c * w[2];
            assert!((recon - hit.point).norm() < 1e-12);
            assert!(w.iter().all(|&x| x >= 0.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn random_meshes_match_brute_force(seed in 0u64..10_000, tris in 1usize..=200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mesh = random_mesh(&mut rng, tris);
            let idx = ClosestPointIndex::build(&mesh).unwrap();
            for _ in 0..10 {
                let p = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let (d, _) = brute(&mesh, &p);
                prop_assert!((idx.distance(&p) - d).abs() < 1e-12);
            }
        }
    }
}
