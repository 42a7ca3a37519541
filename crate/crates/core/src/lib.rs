pub mod cell;
pub mod corrector;
pub mod error;
pub mod hull;
pub mod layer;
mod krylov;
pub mod operator;
pub mod particles;
pub mod profile;
pub mod potential;
pub mod series;

pub use error::{Error, Result};
