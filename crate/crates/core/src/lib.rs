pub mod assignment;
pub mod efficiency;
pub mod error;
pub mod grid;
pub mod konijn;
pub mod nulldist;
pub mod numeric;
pub mod pipeline;
pub mod points;
pub mod quadrature;
pub mod rng;
pub mod scores;
pub mod special;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{Grid, GridSpec, SphereArray};
pub use points::Points;
