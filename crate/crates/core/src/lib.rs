//! Shape-from-shading for orthographic gray-level images.
//!
//! A height field `u` is recovered from one brightness image under the
//! Lambertian, Oren-Nayar or Phong reflectance models. The image equation is
//! rewritten as a Hamilton-Jacobi fixed-point problem in the Kruzkov variable
//! `v = (1 - e^{-mu u}) / mu` and solved by a monotone semi-Lagrangian scheme.
//!
//! ```
//! use sfs_core::{grid::Grid, reflectance::{render_image, Direction, ModelSpec}, scenes, solver};
//!
//! let grid = Grid::square(65, 1.0).unwrap();
//! let scene = scenes::make_sphere(&grid);
//! let up = Direction::VERTICAL;
//! let image = render_image(&scene.height, &scene.mask, &ModelSpec::Lambertian, &up, &up, true).unwrap();
//! let config = solver::SolverConfig { eta: 1e-6, ..Default::default() };
//! let (height, report) =
//!     solver::solve(&image, &scene.mask, &ModelSpec::Lambertian, &up, &up, &config).unwrap();
//! let err = sfs_core::metrics::surface_errors(&scene.height, &height, &scene.mask).unwrap();
//! assert!(err.l2 < 0.25); // coarse grid; about 0.07 at 256 x 256
//! assert!(report.monotone_decrease);
//! ```

pub mod bench;
pub mod config;
pub mod error;
pub mod grid;
pub mod hj;
pub mod io;
pub mod metrics;
pub mod reflectance;
pub mod scenes;
pub mod solver;

pub use error::{Result, SfsError};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/quick-start.md")]
    struct QuickStart;
    #[doc = include_str!("../../../book/src/reflectance.md")]
    struct Reflectance;
    #[doc = include_str!("../../../book/src/boundary.md")]
    struct Boundary;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    struct Benchmarks;
}
