//! Full-order models.

pub mod aerofoil;
pub mod flexwing;
pub mod linear;
pub mod polynomial;
pub mod rigid;
