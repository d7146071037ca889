//! The outer loop: global mesh, sample assignment, per-cell optimization
//! and Hermite refinement, repeated until the vertices settle.

use std::time::Instant;

use rayon::prelude::*;

use crate::assign::{assign_samples, select_batch, BatchPolicy};
use crate::contour::build_global_mesh;
use crate::error::{Error, Result};
use crate::grid::{find_interesting_cells, find_interesting_edges, CellId, Incidence, SdfGrid};
use crate::hermite::{edge_segment, initial_hermite, update_hermite, HermiteSample};
use crate::mesh::{triangulate_quads, ClosestPointIndex, QuadMesh};
use crate::optimizer::{optimize_cell, CellContext, InnerParams, InnerResult};
use crate::scalar::{Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionConfig<T: Real> {
    /// Weight of the Hermite plane energy relative to the distance energy.
    pub w_hermite: T,
    /// Step size of the Hermite refinement, in `[0, 1]`.
    pub update_weight: T,
    /// Proximal weight of every inner step.
    pub mu: T,
    /// Inner and outer convergence threshold; `None` means `1e-4 * spacing`.
    pub tol: Option<T>,
    pub max_outer: usize,
    pub max_inner: usize,
    pub batch_size: usize,
    /// Use only samples with `|s| <= n * cell diagonal`.
    pub narrow_band: Option<T>,
    pub seed: u64,
    /// Multiply `w_hermite` by each cell's sample count.
    pub normalize_w_hermite: bool,
    /// Drop inside samples from the distance energy.
    pub pseudo_sdf_interior: bool,
    /// Stop the outer loop once no vertex moves more than the tolerance.
    pub early_exit: bool,
}

impl<T: Real> Default for ReconstructionConfig<T> {
    fn default() -> Self {
        ReconstructionConfig {
            w_hermite: T::lit(0.02),
            update_weight: T::lit(0.2),
            mu: T::lit(0.1),
            tol: None,
            max_outer: 100,
            max_inner: 100,
            batch_size: 200_000,
            narrow_band: None,
            seed: 0,
            normalize_w_hermite: false,
            pseudo_sdf_interior: false,
            early_exit: true,
        }
    }
}

impl<T: Real> ReconstructionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.w_hermite >= T::zero()) || !self.w_hermite.is_finite() {
            return bad("w_hermite must be a finite value >= 0");
        }
        if !(self.update_weight >= T::zero() && self.update_weight <= T::one()) {
            return bad("update weight must lie in [0, 1]");
        }
        if !(self.mu > T::zero()) || !self.mu.is_finite() {
            return bad("mu must be a finite value > 0");
        }
        if let Some(t) = self.tol {
            if !(t >= T::zero()) {
                return bad("tolerance must be >= 0");
            }
        }
        if let Some(n) = self.narrow_band {
            if !(n > T::zero()) {
                return bad("narrow band must be > 0");
            }
        }
        if self.max_inner == 0 {
            return bad("max_inner must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1");
        }
        Ok(())
    }

    pub fn tolerance(&self, grid: &SdfGrid<T>) -> T {
        self.tol.unwrap_or_else(|| T::lit(1e-4) * grid.spacing())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState<T: Real> {
    pub cell: CellId,
    pub x: Vec3<T>,
    pub last: Option<InnerResult<T>>,
}

/// Starting point of the reconstruction.
#[derive(Debug, Clone)]
pub struct Initial<T: Real> {
    pub incidence: Incidence,
    /// Indexed like `incidence.edges`.
    pub hermite: Vec<HermiteSample<T>>,
    /// Indexed like `incidence.cells`.
    pub cells: Vec<CellState<T>>,
}

/// Hermite data on every interesting edge and each cell vertex at the mean
/// of its edges' Hermite points.
pub fn initialize<T: Real>(grid: &SdfGrid<T>) -> Result<Initial<T>> {
    let edges = find_interesting_edges(grid);
    if edges.is_empty() {
        return Err(Error::EmptySurface);
    }
    let incidence = find_interesting_cells(grid, &edges);
    let hermite = initial_hermite(grid, &incidence)?;
    let cells = incidence
        .cells
        .iter()
        .zip(&incidence.cell_edges)
        .map(|(&cell, es)| {
            let sum = es.iter().fold(Vec3::zeros(), |acc, &e| acc + hermite[e].point);
            CellState {
                cell,
                x: sum / T::of_usize(es.len()),
                last: None,
            }
        })
        .collect();
    Ok(Initial {
        incidence,
        hermite,
        cells,
    })
}

/// Per outer iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    /// Mean `| |s| - d |` of the assigned samples against the global mesh
    /// the iteration started from.
    pub mean_residual: f64,
    /// Mean Hermite point displacement of the update (0 when skipped).
    pub hermite_delta: f64,
    pub converged_fraction: f64,
    pub seconds: f64,
    pub assigned: usize,
    pub max_displacement: f64,
}

#[derive(Debug, Clone)]
pub struct Reconstruction<T: Real> {
    pub mesh: QuadMesh<T>,
    pub trace: Vec<IterationStats>,
    pub incidence: Incidence,
    pub hermite: Vec<HermiteSample<T>>,
    pub cells: Vec<CellState<T>>,
}

pub fn reconstruct<T: Real>(grid: &SdfGrid<T>, config: &ReconstructionConfig<T>) -> Result<QuadMesh<T>> {
    reconstruct_with_trace(grid, config).map(|r| r.mesh)
}

pub fn reconstruct_with_trace<T: Real>(grid: &SdfGrid<T>, config: &ReconstructionConfig<T>) -> Result<Reconstruction<T>> {
    config.validate()?;
    let Initial {
        incidence: inc,
        mut hermite,
        mut cells,
    } = initialize(grid)?;
    let tau = config.tolerance(grid);
    let policy = BatchPolicy {
        batch_size: config.batch_size,
        narrow_band: config.narrow_band,
        seed: config.seed,
    };
    let mut trace = Vec::new();

    for k in 0..config.max_outer {
        let started = Instant::now();
        let vertices: Vec<Vec3<T>> = cells.iter().map(|c| c.x).collect();
        let global = build_global_mesh(grid, &inc, &vertices)?;
        if global.is_empty() {
            break;
        }
        let tri = triangulate_quads(&global);
        let index = ClosestPointIndex::build(&tri)?;
        let batch = select_batch(grid, &policy, k as u64);
        let assignment = assign_samples(&batch, grid, &tri, &index, &tri.open_edge_mask(), &inc.cells);

        let params = InnerParams {
            w_hermite: config.w_hermite,
            mu: config.mu,
            tau,
            max_inner: config.max_inner,
        };
        let results: Vec<InnerResult<T>> = (0..inc.cells.len())
            .into_par_iter()
            .map(|c| {
                let ctx = CellContext {
                    grid,
                    inc: &inc,
                    cell: c,
                    hermite: &hermite,
                    vertices: &vertices,
                };
                let mut samples = assignment.per_cell[c].clone();
                if config.pseudo_sdf_interior {
                    samples.retain(|s| s.sign > 0);
                }
                let mut p = params;
                if config.normalize_w_hermite {
                    p.w_hermite = p.w_hermite * T::of_usize(samples.len().max(1));
                }
                optimize_cell(&ctx, vertices[c], &samples, &p)
            })
            .collect();

        let mut max_disp = T::zero();
        let mut converged = 0usize;
        for (state, r) in cells.iter_mut().zip(&results) {
            let d = (r.x - state.x).norm();
            if d > max_disp {
                max_disp = d;
            }
            converged += r.converged as usize;
            state.x = r.x;
            state.last = Some(*r);
        }

        let mut hermite_delta = 0.0;
        if k + 1 < config.max_outer {
            let updated: Vec<Option<HermiteSample<T>>> = (0..inc.edges.len())
                .into_par_iter()
                .map(|e| {
                    if !inc.is_interior_edge(e) {
                        return None;
                    }
                    let ring: Vec<Vec3<T>> = inc.edge_cells[e].iter().flatten().map(|&c| cells[c].x).collect();
                    let seg = edge_segment(grid, &inc.edges[e]);
                    Some(update_hermite(&hermite[e], seg, &ring, config.update_weight))
                })
                .collect();
            let mut sum = 0.0;
            let mut n = 0usize;
            for (slot, new) in hermite.iter_mut().zip(updated) {
                if let Some(new) = new {
                    sum += (new.point - slot.point).norm().as_f64();
                    n += 1;
                    *slot = new;
                }
            }
            if n > 0 {
                hermite_delta = sum / n as f64;
            }
        }

        trace.push(IterationStats {
            iteration: k,
            mean_residual: assignment.mean_abs_residual().as_f64(),
            hermite_delta,
            converged_fraction: converged as f64 / cells.len() as f64,
            seconds: started.elapsed().as_secs_f64(),
            assigned: assignment.assigned_count(),
            max_displacement: max_disp.as_f64(),
        });

        if config.early_exit && max_disp < tau {
            break;
        }
    }

    let vertices: Vec<Vec3<T>> = cells.iter().map(|c| c.x).collect();
    let mesh = build_global_mesh(grid, &inc, &vertices)?;
    Ok(Reconstruction {
        mesh,
        trace,
        incidence: inc,
        hermite,
        cells,
    })
}
