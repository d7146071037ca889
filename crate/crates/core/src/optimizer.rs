//! Inner loop of the per-cell vertex optimization: linearized distance
//! terms, Hermite planes and a proximal term, minimized as a 3x3 quadratic.

use nalgebra::Matrix3;

use crate::assign::AssignedSample;
use crate::contour::{build_local_mesh, face_intersections_at, LocalMesh};
use crate::grid::{Incidence, SdfGrid};
use crate::hermite::HermiteSample;
use crate::scalar::{Real, Vec3};

/// One linearized distance term `(alpha d . x - rhs)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTerm<T: Real> {
    /// Barycentric weight of the cell vertex at the closest point.
    pub alpha: T,
    /// Unit direction from the sample toward its closest point.
    pub d: Vec3<T>,
    /// `d . (q - beta p - gamma h)`, the part fixed while `x` moves.
    pub rhs: T,
}

/// Closest point `q` to `t` on the sphere of radius `s_abs` around `u`,
/// and the unit direction `d` from `u` toward `t`.
///
/// `None` when `t` coincides with `u`.
pub fn sphere_closest_point<T: Real>(u: &Vec3<T>, s_abs: T, t: &Vec3<T>) -> Option<(Vec3<T>, Vec3<T>)> {
    let diff = t - u;
    let len = diff.norm();
    if len < T::lit(1e-12) * s_abs || (len < T::lit(1e-15) && s_abs < T::lit(1e-15)) || len == T::zero() {
        return None;
    }
    let d = diff / len;
    Some((u + d * s_abs, d))
}

/// Linearizes every sample against the local mesh (cell vertex at index 0).
///
/// Samples whose closest point lies on an open edge through the cell
/// vertex are skipped: such a point sits on the rim of a fan cut off by
/// the grid boundary, not on the reconstructed surface.
pub fn linearize_terms<T: Real>(local: &LocalMesh<T>, samples: &[AssignedSample<T>]) -> Vec<LinearTerm<T>> {
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        let Some((t, tri, w)) = local.closest(&s.position) else {
            continue;
        };
        let corners = local.mesh.triangles[tri];
        let slot = corners.iter().position(|&v| v == 0);
        let alpha = slot.map_or(T::zero(), |k| w[k]);
        if alpha > T::zero() && on_open_edge_through_vertex(&corners, &w, local.open_mask[tri]) {
            continue;
        }
        let Some((q, d)) = sphere_closest_point(&s.position, s.s_abs, &t) else {
            continue;
        };
        let mut fixed = Vec3::zeros();
        for k in 0..3 {
            if corners[k] != 0 {
                fixed += local.mesh.vertices[corners[k]] * w[k];
            }
        }
        out.push(LinearTerm {
            alpha,
            d,
            rhs: d.dot(&(q - fixed)),
        });
    }
    out
}

fn on_open_edge_through_vertex<T: Real>(corners: &[usize; 3], w: &[T; 3], mask: u8) -> bool {
    (0..3).any(|k| {
        mask & (1 << k) != 0 && (corners[k] == 0 || corners[(k + 1) % 3] == 0) && w[(k + 2) % 3] == T::zero()
    })
}

/// Explicit quadratic `x^T m x - 2 b^T x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic<T: Real> {
    pub m: Matrix3<T>,
    pub b: Vec3<T>,
    pub c: T,
}

impl<T: Real> Quadratic<T> {
    /// Sum of the distance terms, `w_h`-weighted Hermite planes `(h, n)` and
    /// `mu |x - x_prev|^2`.
    pub fn assemble(terms: &[LinearTerm<T>], planes: &[(Vec3<T>, Vec3<T>)], x_prev: &Vec3<T>, w_h: T, mu: T) -> Self {
        let mut m = Matrix3::identity() * mu;
        let mut b = x_prev * mu;
        let mut c = mu * x_prev.norm_squared();
        for t in terms {
            let a = t.d * t.alpha;
            m += a * a.transpose();
            b += a * t.rhs;
            c += t.rhs * t.rhs;
        }
        for (h, n) in planes {
            let off = n.dot(h);
            m += n * n.transpose() * w_h;
            b += n * (off * w_h);
            c += w_h * off * off;
        }
        Quadratic { m, b, c }
    }

    pub fn value(&self, x: &Vec3<T>) -> T {
        x.dot(&(self.m * x)) - (self.b.dot(x) + self.b.dot(x)) + self.c
    }

    /// `value(to) - value(from)` without cancelling against `c`.
    pub fn change(&self, from: &Vec3<T>, to: &Vec3<T>) -> T {
        let delta = to - from;
        delta.dot(&(self.m * (from + to) - self.b * T::lit(2.0)))
    }

    pub fn gradient(&self, x: &Vec3<T>) -> Vec3<T> {
        (self.m * x - self.b) * T::lit(2.0)
    }

    /// Minimizer, or `None` if the matrix is not positive definite.
    pub fn minimizer(&self) -> Option<Vec3<T>> {
        self.m.cholesky().map(|ch| ch.solve(&self.b))
    }
}

/// Exact minimizer of one inner step's quadratic model.
///
/// Stays at `x_prev` when the system is not positive definite (which needs
/// `mu <= 0`) or when rounding would make the solve raise the model value
/// (steps of an ulp near convergence).
pub fn solve_inner_step<T: Real>(
    terms: &[LinearTerm<T>],
    planes: &[(Vec3<T>, Vec3<T>)],
    x_prev: &Vec3<T>,
    w_h: T,
    mu: T,
) -> Vec3<T> {
    let q = Quadratic::assemble(terms, planes, x_prev, w_h, mu);
    q.minimizer()
        .filter(|x| x.iter().all(|c| c.is_finite()) && q.change(x_prev, x) <= T::zero())
        .unwrap_or(*x_prev)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerParams<T: Real> {
    pub w_hermite: T,
    pub mu: T,
    pub tau: T,
    pub max_inner: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerResult<T: Real> {
    pub x: Vec3<T>,
    pub iterations: usize,
    pub converged: bool,
    pub final_step: T,
}

/// Frozen data a cell sees during one outer iteration.
#[derive(Debug, Clone, Copy)]
pub struct CellContext<'a, T: Real> {
    pub grid: &'a SdfGrid<T>,
    pub inc: &'a Incidence,
    pub cell: usize,
    pub hermite: &'a [HermiteSample<T>],
    /// Vertices of all cells at the start of the outer iteration.
    pub vertices: &'a [Vec3<T>],
}

impl<T: Real> CellContext<'_, T> {
    /// Local mesh with the cell vertex at `x`, neighbors at their frozen
    /// positions.
    pub fn local_mesh(&self, x: Vec3<T>) -> LocalMesh<T> {
        let fis = face_intersections_at(self.grid, self.inc, self.cell, &x, self.vertices);
        build_local_mesh(x, self.inc, self.cell, self.hermite, &fis)
    }

    /// `(point, normal)` of the Hermite samples on the cell's edges.
    pub fn planes(&self) -> Vec<(Vec3<T>, Vec3<T>)> {
        self.inc.cell_edges[self.cell]
            .iter()
            .map(|&e| (self.hermite[e].point, self.hermite[e].normal))
            .collect()
    }
}

/// Runs inner steps from `x_start` until a step shorter than `tau` or
/// `max_inner` steps. The vertex is free to leave its cell.
pub fn optimize_cell<T: Real>(
    ctx: &CellContext<'_, T>,
    x_start: Vec3<T>,
    samples: &[AssignedSample<T>],
    params: &InnerParams<T>,
) -> InnerResult<T> {
    let planes = ctx.planes();
    let mut x = x_start;
    let mut step = T::zero();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_inner.max(1) {
        let terms = if samples.is_empty() {
            Vec::new()
        } else {
            linearize_terms(&ctx.local_mesh(x), samples)
        };
        let next = solve_inner_step(&terms, &planes, &x, params.w_hermite, params.mu);
        step = (next - x).norm();
        x = next;
        iterations += 1;
        if step <= params.tau {
            converged = true;
            break;
        }
    }
    InnerResult {
        x,
        iterations,
        converged,
        final_step: step,
    }
}
