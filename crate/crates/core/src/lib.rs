//! Random sketching of structured sets: sketch matrices, distortion
//! measurement, complexity estimates, target-dimension bounds and
//! model-based recovery.

pub mod bounds;
pub mod complexity;
pub mod distortion;
pub mod error;
pub mod experiment;
pub mod io;
pub mod points;
pub mod psi2;
pub mod recovery;
pub mod rng;
pub mod sets;
pub mod sketch;
pub mod subspaces;

pub use bounds::{target_dimension, BoundModel, BoundParams, BoundResult};
pub use error::{Error, Result};
pub use points::PointSet;
pub use sets::StructuredSet;
pub use sketch::{Family, Sketch, SketchSpec};
pub use subspaces::{Subspace, UosFamily};
