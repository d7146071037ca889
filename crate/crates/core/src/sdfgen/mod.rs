//! Test and demo fixtures: analytic shapes, boolean combinations, sampling
//! onto grids and signed distance grids of watertight triangle meshes.

mod mesh_sdf;
mod reference;
mod spec_file;

pub use mesh_sdf::{mesh_to_sdf, MeshSdf};
pub use reference::{box_mesh, sphere_mesh};
pub use spec_file::{parse_shape_spec, read_shape_spec};

use std::sync::Arc;

use nalgebra::{Rotation3, Unit};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SdfGrid;
use crate::scalar::{Real, Vec3};

/// Signed distance oracle with a gradient.
pub trait AnalyticSdf<T: Real>: Sync {
    fn value(&self, p: &Vec3<T>) -> T;

    /// Central differences with step `1e-6` unless overridden.
    fn gradient(&self, p: &Vec3<T>) -> Vec3<T> {
        let h = T::lit(1e-6);
        let mut g = Vec3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            g[k] = (self.value(&(p + e)) - self.value(&(p - e))) / (h + h);
        }
        g
    }
}

#[derive(Debug, Clone)]
pub enum Shape {
    Sphere {
        center: Vec3<f64>,
        radius: f64,
    },
    Box {
        center: Vec3<f64>,
        half: Vec3<f64>,
    },
    RotatedBox {
        center: Vec3<f64>,
        half: Vec3<f64>,
        rotation: Rotation3<f64>,
    },
    Union(Box<Shape>, Box<Shape>),
    Intersection(Box<Shape>, Box<Shape>),
    Difference(Box<Shape>, Box<Shape>),
    Mesh(Arc<MeshSdf>),
}

/// Axis-aligned sampling box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec3<f64>,
    pub max: Vec3<f64>,
}

impl Bounds {
    pub fn unit() -> Self {
        Bounds {
            min: Vec3::zeros(),
            max: Vec3::repeat(1.0),
        }
    }

    pub fn new(min: Vec3<f64>, max: Vec3<f64>) -> Self {
        Bounds { min, max }
    }

    pub fn extent(&self) -> Vec3<f64> {
        self.max - self.min
    }

    /// Grid origin and spacing for `dims` nodes spanning the box; the
    /// spacing must agree across axes.
    pub fn grid_frame(&self, dims: [usize; 3]) -> Result<(Vec3<f64>, f64)> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::InvalidGrid(format!("every dimension needs at least 2 nodes, got {dims:?}")));
        }
        let ext = self.extent();
        let h: Vec<f64> = (0..3).map(|k| ext[k] / (dims[k] - 1) as f64).collect();
        if !(h[0] > 0.0) || !h[0].is_finite() {
            return Err(Error::InvalidGrid("sampling bounds must have positive extent".into()));
        }
        if h.iter().any(|&s| (s - h[0]).abs() > 1e-9 * h[0]) {
            return Err(Error::InvalidGrid(format!(
                "bounds and dims imply non-uniform spacing {:?}",
                h
            )));
        }
        Ok((self.min, h[0]))
    }
}

/// A shape together with its sampling box.
#[derive(Debug, Clone)]
pub struct ShapeSpec {
    pub shape: Shape,
    pub bounds: Bounds,
}

fn box_value(q: &Vec3<f64>, half: &Vec3<f64>) -> f64 {
    let d = q.abs() - half;
    d.sup(&Vec3::zeros()).norm() + d.max().min(0.0)
}

fn box_gradient(q: &Vec3<f64>, half: &Vec3<f64>) -> Vec3<f64> {
    let d = q.abs() - half;
    let sign = q.map(|c| if c < 0.0 { -1.0 } else { 1.0 });
    let outside = d.sup(&Vec3::zeros());
    let n = outside.norm();
    if n > 0.0 {
        return (outside / n).component_mul(&sign);
    }
    let k = d.imax();
    let mut g = Vec3::zeros();
    g[k] = sign[k];
    g
}

impl Shape {
    pub fn sphere(center: Vec3<f64>, radius: f64) -> Self {
        Shape::Sphere { center, radius }
    }

    pub fn cuboid(center: Vec3<f64>, half: Vec3<f64>) -> Self {
        Shape::Box { center, half }
    }

    /// Box rotated by `angle_deg` degrees about `axis` around its center.
    pub fn rotated_cuboid(center: Vec3<f64>, half: Vec3<f64>, axis: Vec3<f64>, angle_deg: f64) -> Self {
        let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle_deg.to_radians());
        Shape::RotatedBox { center, half, rotation }
    }

    pub fn eval(&self, p: &Vec3<f64>) -> f64 {
        match self {
            Shape::Sphere { center, radius } => (p - center).norm() - radius,
            Shape::Box { center, half } => box_value(&(p - center), half),
            Shape::RotatedBox { center, half, rotation } => box_value(&rotation.inverse_transform_vector(&(p - center)), half),
            Shape::Union(a, b) => a.eval(p).min(b.eval(p)),
            Shape::Intersection(a, b) => a.eval(p).max(b.eval(p)),
            Shape::Difference(a, b) => a.eval(p).max(-b.eval(p)),
            Shape::Mesh(m) => m.signed_distance(p).unwrap_or(f64::NAN),
        }
    }

    pub fn grad(&self, p: &Vec3<f64>) -> Vec3<f64> {
        match self {
            Shape::Sphere { center, .. } => (p - center).try_normalize(0.0).unwrap_or_else(|| Vec3::new(1.0, 0.0, 0.0)),
            Shape::Box { center, half } => box_gradient(&(p - center), half),
            Shape::RotatedBox { center, half, rotation } => {
                rotation * box_gradient(&rotation.inverse_transform_vector(&(p - center)), half)
            }
            Shape::Union(a, b) => {
                if a.eval(p) <= b.eval(p) {
                    a.grad(p)
                } else {
                    b.grad(p)
                }
            }
            Shape::Intersection(a, b) => {
                if a.eval(p) >= b.eval(p) {
                    a.grad(p)
                } else {
                    b.grad(p)
                }
            }
            Shape::Difference(a, b) => {
                if a.eval(p) >= -b.eval(p) {
                    a.grad(p)
                } else {
                    -b.grad(p)
                }
            }
            Shape::Mesh(_) => AnalyticSdf::<f64>::gradient(&Numeric(self), p),
        }
    }
}

struct Numeric<'a>(&'a Shape);

impl AnalyticSdf<f64> for Numeric<'_> {
    fn value(&self, p: &Vec3<f64>) -> f64 {
        self.0.eval(p)
    }
}

impl<T: Real> AnalyticSdf<T> for Shape {
    fn value(&self, p: &Vec3<T>) -> T {
        T::lit(self.eval(&p.map(|c| c.as_f64())))
    }

    fn gradient(&self, p: &Vec3<T>) -> Vec3<T> {
        self.grad(&p.map(|c| c.as_f64())).map(T::lit)
    }
}

/// Signed distance of `shape` at `p`.
pub fn eval_sdf(shape: &Shape, p: &Vec3<f64>) -> f64 {
    shape.eval(p)
}

/// Samples the shape on a `dims` grid spanning `bounds`. Meshes use the
/// row-wise parity fast path.
pub fn sample_to_grid(shape: &Shape, dims: [usize; 3], bounds: &Bounds) -> Result<SdfGrid<f64>> {
    if let Shape::Mesh(m) = shape {
        return m.sample_grid(dims, bounds);
    }
    let (origin, spacing) = bounds.grid_frame(dims)?;
    let n = dims[0] * dims[1] * dims[2];
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|flat| {
            let i = flat % dims[0];
            let r = flat / dims[0];
            let p = origin + Vec3::new(i as f64, (r % dims[1]) as f64, (r / dims[1]) as f64) * spacing;
            shape.eval(&p)
        })
        .collect();
    SdfGrid::new(dims, origin, spacing, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sphere_values() {
        let s = Shape::sphere(Vec3::zeros(), 1.0);
        assert_eq!(eval_sdf(&s, &Vec3::new(2.0, 0.0, 0.0)), 1.0);
        assert_eq!(eval_sdf(&s, &Vec3::zeros()), -1.0);
    }

    #[test]
    fn box_corner_region() {
        let b = Shape::cuboid(Vec3::zeros(), Vec3::repeat(1.0));
        assert!((eval_sdf(&b, &Vec3::new(2.0, 2.0, 0.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(eval_sdf(&b, &Vec3::new(0.5, 0.0, 0.0)), -0.5);
        assert_eq!(eval_sdf(&b, &Vec3::new(3.0, 0.5, -0.5)), 2.0);
    }

    #[test]
    fn booleans() {
        let a = Shape::sphere(Vec3::new(-2.0, 0.0, 0.0), 1.0);
        let b = Shape::sphere(Vec3::new(2.0, 0.0, 0.0), 1.0);
        let u = Shape::Union(Box::new(a.clone()), Box::new(b.clone()));
        assert_eq!(eval_sdf(&u, &Vec3::new(-1.0, 0.0, 0.0)), 0.0);
        assert_eq!(eval_sdf(&u, &Vec3::new(3.0, 0.0, 0.0)), 0.0);
        let big = Shape::sphere(Vec3::zeros(), 2.0);
        let small = Shape::sphere(Vec3::zeros(), 1.0);
        let shell = Shape::Difference(Box::new(big.clone()), Box::new(small.clone()));
        assert_eq!(eval_sdf(&shell, &Vec3::zeros()), 1.0);
        assert_eq!(eval_sdf(&shell, &Vec3::new(1.5, 0.0, 0.0)), -0.5);
        let lens = Shape::Intersection(Box::new(big), Box::new(Shape::sphere(Vec3::new(3.0, 0.0, 0.0), 2.0)));
        assert_eq!(eval_sdf(&lens, &Vec3::new(1.5, 0.0, 0.0)), -0.5);
    }

    #[test]
    fn rotated_box_matches_rotated_point() {
        let b = Shape::rotated_cuboid(Vec3::repeat(0.5), Vec3::new(0.3, 0.2, 0.1), Vec3::z(), 90.0);
        // the long x half-extent now lies along y
        assert!((eval_sdf(&b, &Vec3::new(0.5, 0.8, 0.5))).abs() < 1e-12);
        assert!((eval_sdf(&b, &Vec3::new(0.7, 0.5, 0.5))).abs() < 1e-12);
        let g = b.grad(&Vec3::new(0.5, 0.9, 0.5));
        assert!((g - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn box_gradient_matches_finite_differences() {
        let b = Shape::rotated_cuboid(Vec3::repeat(0.5), Vec3::new(0.3, 0.2, 0.25), Vec3::new(1.0, 2.0, 0.5), 37.0);
        for p in [Vec3::new(0.1, 0.2, 0.3), Vec3::new(0.9, 0.45, 0.5), Vec3::new(0.55, 0.52, 0.48)] {
            let fd = AnalyticSdf::<f64>::gradient(&Numeric(&b), &p);
            assert!((fd - b.grad(&p)).norm() < 1e-6);
        }
    }

    #[test]
    fn sphere_grid_is_symmetric() {
        let s = Shape::sphere(Vec3::zeros(), 0.5);
        let g = sample_to_grid(&s, [9, 9, 9], &Bounds::new(Vec3::repeat(-1.0), Vec3::repeat(1.0))).unwrap();
        assert_eq!(g.value([4, 4, 4]), -0.5);
        for k in 0..9 {
            for j in 0..9 {
                for i in 0..9 {
                    let v = g.value([i, j, k]);
                    assert_eq!(v, g.value([j, k, i]));
                    assert_eq!(v, g.value([k, i, j]));
                }
            }
        }
    }

    #[test]
    fn non_uniform_bounds_rejected() {
        let s = Shape::sphere(Vec3::zeros(), 0.5);
        let b = Bounds::new(Vec3::zeros(), Vec3::new(1.0, 2.0, 1.0));
        assert!(matches!(sample_to_grid(&s, [5, 5, 5], &b), Err(Error::InvalidGrid(_))));
        assert!(sample_to_grid(&s, [5, 9, 5], &b).is_ok());
    }

    #[test]
    fn lipschitz_audit() {
        let shapes = [
            Shape::sphere(Vec3::repeat(0.5), 0.31),
            Shape::cuboid(Vec3::repeat(0.5), Vec3::new(0.3, 0.22, 0.18)),
            Shape::rotated_cuboid(Vec3::repeat(0.5), Vec3::repeat(0.25), Vec3::z(), 30.0),
        ];
        for s in &shapes {
            let g = sample_to_grid(s, [17, 17, 17], &Bounds::unit()).unwrap();
            let h = g.spacing();
            for k in 0..17 {
                for j in 0..17 {
                    for i in 0..16 {
                        assert!((g.value([i + 1, j, k]) - g.value([i, j, k])).abs() <= h + 1e-9);
                        assert!((g.value([j, i + 1, k]) - g.value([j, i, k])).abs() <= h + 1e-9);
                        assert!((g.value([j, k, i + 1]) - g.value([j, k, i])).abs() <= h + 1e-9);
                    }
                }
            }
        }
    }

    fn point() -> impl Strategy<Value = Vec3<f64>> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn exact_sdfs_are_one_lipschitz(p in point(), q in point(), angle in 0.0..180.0f64) {
            for s in [
                Shape::sphere(Vec3::new(0.1, -0.2, 0.3), 0.7),
                Shape::cuboid(Vec3::new(0.1, 0.0, -0.1), Vec3::new(0.5, 0.3, 0.8)),
                Shape::rotated_cuboid(Vec3::zeros(), Vec3::new(0.5, 0.3, 0.8), Vec3::new(1.0, 1.0, 0.0), angle),
            ] {
                prop_assert!((s.eval(&p) - s.eval(&q)).abs() <= (p - q).norm() + 1e-12);
            }
        }

        #[test]
        fn box_zero_set_is_the_surface(u in -1.0..1.0f64, v in -1.0..1.0f64, face in 0usize..6) {
            let half = Vec3::new(0.5, 0.3, 0.8);
            let b = Shape::cuboid(Vec3::zeros(), half);
            let axis = face % 3;
            let mut p = Vec3::new(u * half.x, v * half.y, u * v * half.z);
            p[axis] = if face < 3 { half[axis] } else { -half[axis] };
            prop_assert!(b.eval(&p).abs() < 1e-15);
            let n = b.grad(&(p * 1.0));
            prop_assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }
}
