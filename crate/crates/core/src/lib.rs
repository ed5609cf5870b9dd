//! Lucas-Kanade pure-translation tracking with interchangeable step solvers.
//!
//! The crate is organized around the data flow of a tracking benchmark:
//!
//! * [`raster`] — grayscale image container, subpixel sampling, patch
//!   extraction, derivative fields and impulse noise.
//! * [`pgm`] — binary PGM (P5) reader/writer used for frame I/O.
//! * [`optim`] — per-iteration step rules: Gauss-Newton, gradient descent,
//!   four conjugate-gradient beta formulas and a normalized Newton step.
//! * [`tracker`] — the iterative alignment loop and frame-to-frame tracking.
//! * [`hull`] — monotone-chain convex hull and interior pruning.
//! * [`synthgen`] — deterministic synthetic video generator.
//! * [`bench`] — error/fail/time metrics, suite runner and CSV reports.

pub mod bench;
pub mod error;
pub mod hull;
pub mod optim;
pub mod pgm;
pub mod raster;
pub mod synthgen;
#[cfg(test)]
pub(crate) mod testutil;
pub mod tracker;

pub use error::{Error, Result};
pub use optim::{CgVariant, Hess2, Method, OptimizerSpec, StepVec, WarpParams};
pub use raster::{GradField, Image, Patch, SecondDerivField};
pub use tracker::{FrameResult, TrackBox, TrackConfig, Trajectory};
