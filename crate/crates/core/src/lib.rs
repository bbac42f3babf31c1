pub mod error;
pub mod fields;
pub mod grid;
pub mod multiindex;
pub mod spectral;

pub use error::{Error, Result};
pub use fields::{FormField, ScalarField, TensorField};
pub use grid::TorusGrid;
pub mod exterior;
pub mod linalg;
pub mod curvature;
pub mod series;
pub mod solver;
pub mod reference;
pub mod io;
pub mod verification;
