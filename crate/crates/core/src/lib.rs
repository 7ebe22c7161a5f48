pub mod aero;
pub mod eig;
pub mod error;
pub mod gust;
pub mod models;
pub mod reduction;
pub mod romstore;
pub mod scalar;
pub mod sim;
pub mod statespace;

pub use error::{Error, Result};
