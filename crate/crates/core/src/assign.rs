//! Attribution of grid samples to interesting cells through closest points
//! on the current global mesh.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::grid::{CellId, SdfGrid};
use crate::mesh::{on_open_edge, ClosestHit, ClosestPointIndex, TriMesh};
use crate::scalar::{Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignedSample<T: Real> {
    pub position: Vec3<T>,
    pub s_abs: T,
    /// `+1` outside, `-1` inside (after zero snapping).
    pub sign: i8,
    pub node: usize,
    /// Distance to the global mesh the sample was assigned against.
    pub mesh_distance: T,
}

/// Which grid nodes feed one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchPolicy<T: Real> {
    pub batch_size: usize,
    /// Keep only nodes with `|s| <= n * cell diagonal`.
    pub narrow_band: Option<T>,
    pub seed: u64,
}

/// Node indices used in outer iteration `iteration`, ascending.
///
/// Draws a uniform subset without replacement when the candidate set
/// exceeds the batch size; the draw depends only on the seed and the
/// iteration number.
pub fn select_batch<T: Real>(grid: &SdfGrid<T>, policy: &BatchPolicy<T>, iteration: u64) -> Vec<usize> {
    let candidates: Vec<usize> = match policy.narrow_band {
        Some(n) => {
            let limit = n * grid.cell_diagonal();
            (0..grid.node_count()).filter(|&i| grid.values()[i].abs() <= limit).collect()
        }
        None => (0..grid.node_count()).collect(),
    };
    let amount = policy.batch_size.max(1);
    if candidates.len() <= amount {
        return candidates;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    rng.set_stream(iteration);
    let mut picked: Vec<usize> = index::sample(&mut rng, candidates.len(), amount)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// Farther from the mesh than a cell diagonal plus `|s|`.
    Outlier,
    /// Closest point sits on the open rim of the global mesh, where the
    /// surface leaves the grid.
    Rim,
}

#[derive(Debug, Clone)]
pub struct Assignment<T: Real> {
    /// Samples per interesting cell (indexed like `Incidence::cells`), in
    /// batch order.
    pub per_cell: Vec<Vec<AssignedSample<T>>>,
    pub dropped: Vec<(usize, DropReason)>,
}

impl<T: Real> Assignment<T> {
    pub fn assigned_count(&self) -> usize {
        self.per_cell.iter().map(Vec::len).sum()
    }

    /// Mean of `| |s| - d |` over assigned samples.
    pub fn mean_abs_residual(&self) -> T {
        let n = self.assigned_count();
        if n == 0 {
            return T::zero();
        }
        let sum = self
            .per_cell
            .iter()
            .flatten()
            .fold(T::zero(), |acc, s| acc + (s.s_abs - s.mesh_distance).abs());
        sum / T::of_usize(n)
    }
}

/// Vertex of triangle `tri` with the largest barycentric weight (a vertex
/// index is a cell index), ties to the lowest cell.
pub fn owning_cell<T: Real>(tri: &[usize; 3], bary: &[T; 3]) -> usize {
    let mut best = 0;
    for k in 1..3 {
        if bary[k] > bary[best] || (bary[k] == bary[best] && tri[k] < tri[best]) {
            best = k;
        }
    }
    tri[best]
}

/// Position in `cells` (sorted like flat node indices) of the cell whose box
/// holds `p`. Points on a shared face go to the upper cell.
fn containing_cell<T: Real>(grid: &SdfGrid<T>, cells: &[CellId], p: &Vec3<T>) -> Option<usize> {
    let h = grid.spacing();
    let o = grid.origin();
    let dims = grid.dims();
    let mut id = [0usize; 3];
    for d in 0..3 {
        let t = ((p[d] - o[d]) / h).floor().as_f64();
        if !(t >= 0.0) || t as usize + 1 >= dims[d] {
            return None;
        }
        id[d] = t as usize;
    }
    let key = |c: &CellId| [c.0[2], c.0[1], c.0[0]];
    cells.binary_search_by_key(&[id[2], id[1], id[0]], key).ok()
}

/// Cell a closest point on the global mesh belongs to: the interesting
/// cell whose box contains the point, or, when the point has escaped every
/// interesting cell, the vertex of the hit triangle with the largest
/// barycentric weight.
pub fn owner<T: Real>(grid: &SdfGrid<T>, cells: &[CellId], global: &TriMesh<T>, hit: &ClosestHit<T>) -> usize {
    containing_cell(grid, cells, &hit.point)
        .unwrap_or_else(|| owning_cell(&global.triangles[hit.triangle], &hit.barycentric))
}

/// Assigns each batch node to an interesting cell through its closest point
/// on the triangulated global mesh (see [`owner`]).
///
/// `global` must be the triangulation of the global quad mesh, so that its
/// vertex indices index `cells`.
pub fn assign_samples<T: Real>(
    batch: &[usize],
    grid: &SdfGrid<T>,
    global: &TriMesh<T>,
    index: &ClosestPointIndex<T>,
    open_mask: &[u8],
    cells: &[CellId],
) -> Assignment<T> {
    let diag = grid.cell_diagonal();
    let results: Vec<Result<(usize, AssignedSample<T>), DropReason>> = batch
        .par_iter()
        .map(|&node| {
            let position = grid.flat_position(node);
            let value = grid.snap(grid.values()[node]);
            let hit = index.closest_point(&position);
            let s_abs = value.abs();
            if hit.distance > diag + s_abs {
                return Err(DropReason::Outlier);
            }
            if on_open_edge(&hit.barycentric, open_mask[hit.triangle]) {
                return Err(DropReason::Rim);
            }
            let cell = owner(grid, cells, global, &hit);
            Ok((
                cell,
                AssignedSample {
                    position,
                    s_abs,
                    sign: if value < T::zero() { -1 } else { 1 },
                    node,
                    mesh_distance: hit.distance,
                },
            ))
        })
        .collect();

    let mut per_cell = vec![Vec::new(); cells.len()];
    let mut dropped = Vec::new();
    for (&node, r) in batch.iter().zip(results) {
        match r {
            Ok((cell, s)) => per_cell[cell].push(s),
            Err(reason) => dropped.push((node, reason)),
        }
    }
    Assignment { per_cell, dropped }
}
