//! Pole order spectral sequences of homogeneous polynomials in three or four
//! variables, their partial degeneration certificates, and the roots of
//! Bernstein-Sato polynomials supported at the origin.

pub mod certify;
pub mod decompose;
pub mod error;
pub mod exactla;
pub mod koszul;
pub mod pages;
pub mod polyring;
pub mod roots;
pub mod series;

pub use error::{Error, Result};
