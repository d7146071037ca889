//! Iterative Dual Contouring of sampled signed distance grids.
//!
//! A grid of signed distances is turned into a quad mesh with one vertex per
//! sign-changing cell. Vertex positions and the per-edge Hermite data are
//! refined together: every grid node acts as a sphere sample whose radius is
//! its absolute distance value, and each vertex is pulled so that the mesh
//! touches the spheres assigned to it while staying close to its Hermite
//! planes.
//!
//! ```
//! use sdfdc::{reconstruct, sample_to_grid, Bounds, Config, Shape, Vec3};
//!
//! let shape = Shape::cuboid(Vec3::repeat(0.5), Vec3::new(0.3, 0.22, 0.18));
//! let grid = sample_to_grid(&shape, [5, 5, 5], &Bounds::unit()).unwrap();
//! let mesh = reconstruct(&grid, &Config::default()).unwrap();
//! assert!(!mesh.quads.is_empty());
//! ```
//!
//! Everything numeric is generic over [`scalar::Real`]; the aliases at the
//! crate root fix the scalar to `f64`.

pub mod assign;
pub mod baselines;
pub mod contour;
pub mod error;
pub mod grid;
pub mod hermite;
pub mod mesh;
pub mod metrics;
pub mod optimizer;
pub mod pipeline;
pub mod scalar;
pub mod sdfgen;

pub use error::{Error, Result};
pub use grid::{load_grid, save_grid, CellId, EdgeId, GridEncoding};
pub use mesh::{read_obj, triangulate_quads, write_obj, PolyMesh};
pub use metrics::{evaluate, MetricOptions, MetricReport};
pub use pipeline::{reconstruct, reconstruct_with_trace, IterationStats};
pub use scalar::Real;
pub use sdfgen::{read_shape_spec, sample_to_grid, Bounds, Shape, ShapeSpec};

pub type Vec3 = scalar::Vec3<f64>;
pub type Grid = grid::SdfGrid<f64>;
pub type QuadMesh = mesh::QuadMesh<f64>;
pub type TriMesh = mesh::TriMesh<f64>;
pub type Hermite = hermite::HermiteSample<f64>;
pub type Config = pipeline::ReconstructionConfig<f64>;
pub type Reconstruction = pipeline::Reconstruction<f64>;
