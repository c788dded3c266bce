pub mod app;
pub mod check;
pub mod concavity;
pub mod error;
pub mod geometry;
pub mod localized;
pub mod metric;
pub mod numeric;
pub mod potential;
pub mod primal;
pub mod pressure;
pub mod region;
pub mod sft;
pub mod spectrum;

pub use error::{Error, Result};
