//! Numerical toolkit for isotropic minimal surfaces in spheres and
//! Euclidean spaces: higher fundamental forms and curvature ellipses,
//! isotropy certificates, the associated family and its period monodromy,
//! polar surfaces, and congruence tests between sampled immersions.

pub mod catalog;
pub mod checks;
pub mod error;
pub mod congruence;
pub mod expr;
pub mod family;
pub mod forms;
pub mod jets;
mod linalg;
pub mod sampled;
pub mod source;
pub mod surface;

pub use error::{Error, Result};
