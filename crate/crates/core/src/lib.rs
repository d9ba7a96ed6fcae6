//! Exact computer algebra for the height 2 formal group of y^2 + y = x^3 over F4.

pub mod base_rings;
pub mod checks;
pub mod comodule;
pub mod cubical;
pub mod error;
pub mod formal_group;
pub mod linalg;
pub mod poly;
pub mod series;
pub mod spin_classes;
pub mod stabilizer;

pub use base_rings::{GF4, PadicInt, WittInt};
pub use error::{Error, Result};
pub use series::{MultiSeries, UniSeries};
