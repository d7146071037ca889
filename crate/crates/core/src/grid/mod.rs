//! Uniform signed distance grids: indexing, trilinear interpolation and the
//! sign-change topology (interesting edges and cells).

mod io;
mod topology;

pub use io::{load_grid, read_grid, save_grid, write_grid, GridEncoding};
pub use topology::{find_interesting_cells, find_interesting_edges, Incidence};

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec3};

/// Relative tolerance (in units of spacing) for points that sit slightly
/// outside a cell box, e.g. Hermite points on a shared face.
pub const CELL_DOMAIN_TOLERANCE: f64 = 1e-9;

/// Zero values are snapped to `-ZERO_SNAP * diagonal` before sign tests.
pub const ZERO_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        match i {
            0 => Axis::X,
            1 => Axis::Y,
            2 => Axis::Z,
            _ => panic!("axis index {i} out of range"),
        }
    }

    /// The two remaining axes in cyclic order, so that `(self, u, v)` is
    /// right-handed.
    #[inline]
    pub fn others(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::Z, Axis::X),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }
}

/// A grid edge from node `base` to `base + e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeId {
    pub axis: Axis,
    pub base: [usize; 3],
}

impl EdgeId {
    pub fn new(axis: Axis, base: [usize; 3]) -> Self {
        EdgeId { axis, base }
    }

    pub fn tip(&self) -> [usize; 3] {
        let mut t = self.base;
        t[self.axis.index()] += 1;
        t
    }

    fn sort_key(&self) -> (Axis, usize, usize, usize) {
        (self.axis, self.base[2], self.base[1], self.base[0])
    }
}

impl Ord for EdgeId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for EdgeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A grid cell identified by its minimum corner node. Ordered like the flat
/// node index (x fastest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellId(pub [usize; 3]);

impl CellId {
    /// The 12 edges of this cell, grouped by axis.
    pub fn edges(&self) -> [EdgeId; 12] {
        let [i, j, k] = self.0;
        let mut out = [EdgeId::new(Axis::X, [0, 0, 0]); 12];
        let mut n = 0;
        for axis in Axis::ALL {
            let (u, v) = axis.others();
            for dv in 0..2 {
                for du in 0..2 {
                    let mut b = [i, j, k];
                    b[u.index()] += du;
                    b[v.index()] += dv;
                    out[n] = EdgeId::new(axis, b);
                    n += 1;
                }
            }
        }
        out
    }

    pub fn contains_edge(&self, e: &EdgeId) -> bool {
        let a = e.axis.index();
        (0..3).all(|d| {
            if d == a {
                e.base[d] == self.0[d]
            } else {
                e.base[d] == self.0[d] || e.base[d] == self.0[d] + 1
            }
        })
    }

    fn sort_key(&self) -> (usize, usize, usize) {
        (self.0[2], self.0[1], self.0[0])
    }
}

impl Ord for CellId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for CellId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Regular lattice of signed distance samples.
///
/// Node `(i, j, k)` sits at `origin + spacing * (i, j, k)` and is stored at
/// flat index `i + nx * (j + ny * k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid<T: Real> {
    dims: [usize; 3],
    origin: Vec3<T>,
    spacing: T,
    values: Vec<T>,
}

impl<T: Real> SdfGrid<T> {
    pub fn new(dims: [usize; 3], origin: Vec3<T>, spacing: T, values: Vec<T>) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::InvalidGrid(format!(
                "every dimension needs at least 2 nodes, got {dims:?}"
            )));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive and finite, got {}",
                spacing.as_f64()
            )));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if values.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "expected {expected} values for dims {dims:?}, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at node {pos}")));
        }
        Ok(SdfGrid {
            dims,
            origin,
            spacing,
            values,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(
        dims: [usize; 3],
        origin: Vec3<T>,
        spacing: T,
        f: impl Fn(&Vec3<T>) -> T,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(dims.iter().product());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = origin + Vec3::new(T::of_usize(i), T::of_usize(j), T::of_usize(k)) * spacing;
                    values.push(f(&p));
                }
            }
        }
        Self::new(dims, origin, spacing, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Vec3<T> {
        self.origin
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    pub fn cell_dims(&self) -> [usize; 3] {
        [self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1]
    }

    #[inline]
    pub fn flat_index(&self, n: [usize; 3]) -> usize {
        n[0] + self.dims[0] * (n[1] + self.dims[1] * n[2])
    }

    #[inline]
    pub fn node_coords(&self, flat: usize) -> [usize; 3] {
        let i = flat % self.dims[0];
        let r = flat / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    #[inline]
    pub fn value(&self, n: [usize; 3]) -> T {
        self.values[self.flat_index(n)]
    }

    #[inline]
    pub fn node_position(&self, n: [usize; 3]) -> Vec3<T> {
        self.origin
            + Vec3::new(
                T::of_usize(n[0]) * self.spacing,
                T::of_usize(n[1]) * self.spacing,
                T::of_usize(n[2]) * self.spacing,
            )
    }

    pub fn flat_position(&self, flat: usize) -> Vec3<T> {
        self.node_position(self.node_coords(flat))
    }

    /// Length of the diagonal of the whole grid box.
    pub fn diagonal(&self) -> T {
        let d = Vec3::new(
            T::of_usize(self.dims[0] - 1),
            T::of_usize(self.dims[1] - 1),
            T::of_usize(self.dims[2] - 1),
        );
        d.norm() * self.spacing
    }

    /// Length of the diagonal of a single cell, `spacing * sqrt(3)`.
    pub fn cell_diagonal(&self) -> T {
        self.spacing * T::lit(3f64.sqrt())
    }

    /// Node value with exact zeros replaced by a tiny negative number.
    #[inline]
    pub fn snapped(&self, n: [usize; 3]) -> T {
        self.snap(self.value(n))
    }

    #[inline]
    pub fn snap(&self, v: T) -> T {
        if v == T::zero() {
            -T::lit(ZERO_SNAP) * self.diagonal()
        } else {
            v
        }
    }

    #[inline]
    pub fn is_inside(&self, n: [usize; 3]) -> bool {
        self.snapped(n) < T::zero()
    }

    pub fn contains_cell(&self, c: CellId) -> bool {
        (0..3).all(|d| c.0[d] + 1 < self.dims[d])
    }

    pub fn contains_edge(&self, e: &EdgeId) -> bool {
        (0..3).all(|d| e.base[d] < self.dims[d]) && e.base[e.axis.index()] + 1 < self.dims[e.axis.index()]
    }

    /// Cells around `edge` in counter-clockwise order about the positive
    /// edge axis. Slots outside the grid are `None`.
    pub fn edge_ring(&self, edge: &EdgeId) -> [Option<CellId>; 4] {
        let (u, v) = edge.axis.others();
        let offsets = [(1, 1), (0, 1), (0, 0), (1, 0)];
        let mut out = [None; 4];
        for (slot, &(du, dv)) in offsets.iter().enumerate() {
            let (bu, bv) = (edge.base[u.index()], edge.base[v.index()]);
            if bu < du || bv < dv {
                continue;
            }
            let mut c = edge.base;
            c[u.index()] = bu - du;
            c[v.index()] = bv - dv;
            let cell = CellId(c);
            if self.contains_cell(cell) {
                out[slot] = Some(cell);
            }
        }
        out
    }

    pub fn cell_corner(&self, c: CellId) -> Vec3<T> {
        self.node_position(c.0)
    }

    /// The 8 corner values of `c`, indexed by `dx + 2 dy + 4 dz`.
    pub fn cell_values(&self, c: CellId) -> [T; 8] {
        let mut out = [T::zero(); 8];
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = self.value([c.0[0] + (n & 1), c.0[1] + ((n >> 1) & 1), c.0[2] + ((n >> 2) & 1)]);
        }
        out
    }

    fn local_coords(&self, c: CellId, p: &Vec3<T>) -> Result<Vec3<T>> {
        let local = (p - self.cell_corner(c)) / self.spacing;
        // f32 rounding alone exceeds the f64 tolerance
        let tol = T::lit(CELL_DOMAIN_TOLERANCE).max(T::default_epsilon() * T::lit(64.0));
        let mut excess = T::zero();
        for &t in local.iter() {
            excess = excess.max(-t).max(t - T::one());
        }
        if excess > tol || !excess.is_finite() {
            return Err(Error::OutsideCell {
                excess: (excess * self.spacing).as_f64(),
                tolerance: (tol * self.spacing).as_f64(),
            });
        }
        Ok(local)
    }

    /// Trilinear interpolation of the cell's corner values at `p`.
    pub fn trilinear_value(&self, c: CellId, p: &Vec3<T>) -> Result<T> {
        let t = self.local_coords(c, p)?;
        let v = self.cell_values(c);
        let one = T::one();
        let (x, y, z) = (t.x, t.y, t.z);
        let c00 = v[0] * (one - x) + v[1] * x;
        let c10 = v[2] * (one - x) + v[3] * x;
        let c01 = v[4] * (one - x) + v[5] * x;
        let c11 = v[6] * (one - x) + v[7] * x;
        let c0 = c00 * (one - y) + c10 * y;
        let c1 = c01 * (one - y) + c11 * y;
        Ok(c0 * (one - z) + c1 * z)
    }

    /// World-space gradient of the trilinear interpolant at `p`.
    pub fn trilinear_gradient(&self, c: CellId, p: &Vec3<T>) -> Result<Vec3<T>> {
        let t = self.local_coords(c, p)?;
        let v = self.cell_values(c);
        let one = T::one();
        let (x, y, z) = (t.x, t.y, t.z);
        let gx = ((v[1] - v[0]) * (one - y) + (v[3] - v[2]) * y) * (one - z)
            + ((v[5] - v[4]) * (one - y) + (v[7] - v[6]) * y) * z;
        let gy = ((v[2] - v[0]) * (one - x) + (v[3] - v[1]) * x) * (one - z)
            + ((v[6] - v[4]) * (one - x) + (v[7] - v[5]) * x) * z;
        let gz = ((v[4] - v[0]) * (one - x) + (v[5] - v[1]) * x) * (one - y)
            + ((v[6] - v[2]) * (one - x) + (v[7] - v[3]) * x) * y;
        Ok(Vec3::new(gx, gy, gz) / self.spacing)
    }

    /// Central-difference gradient at a node (one-sided on the border).
    pub fn node_gradient(&self, n: [usize; 3]) -> Vec3<T> {
        let mut g = Vec3::zeros();
        for d in 0..3 {
            let mut lo = n;
            let mut hi = n;
            if n[d] > 0 {
                lo[d] -= 1;
            }
            if n[d] + 1 < self.dims[d] {
                hi[d] += 1;
            }
            let span = T::of_usize(hi[d] - lo[d]) * self.spacing;
            g[d] = (self.value(hi) - self.value(lo)) / span;
        }
        g
    }

    /// Returns a copy with every value transformed by `f`.
    pub fn map_values(&self, f: impl FnMut(T) -> T) -> Result<Self> {
        Self::new(self.dims, self.origin, self.spacing, self.values.iter().copied().map(f).collect())
    }

    /// Returns a copy with `f(flat_index, value)` applied to every node.
    pub fn map_indexed(&self, mut f: impl FnMut(usize, T) -> T) -> Result<Self> {
        let values = self.values.iter().enumerate().map(|(n, &v)| f(n, v)).collect();
        Self::new(self.dims, self.origin, self.spacing, values)
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> SdfGrid<U> {
        SdfGrid {
            dims: self.dims,
            origin: self.origin.map(|c| U::lit(c.as_f64())),
            spacing: U::lit(self.spacing.as_f64()),
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}
