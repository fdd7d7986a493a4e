//! Time-periodic solutions of the forced cubic complex Ginzburg-Landau
//! equation `u_t - (1+i) Laplacian u = |u|^2 u + g` on a periodic box, and
//! their asymptotic stability.

pub mod error;
pub mod forcing;
pub mod norms;
pub mod operators;
pub mod random;
pub mod solver;
pub mod spectral;
pub mod stability;
pub mod verification;

pub use error::{Error, Result};
