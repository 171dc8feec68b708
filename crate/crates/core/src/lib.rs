//! Transport equations `∂_t v + ∂⊥v = 0` on finite metric graphs: Hodge
//! splits, the key decomposition of `D(∂⊥)`, boundary quadruples, the
//! Θ-parametrized dissipative generators and their evolution, and gasket
//! graph approximations.

pub mod decomp;
pub mod elliptic;
pub mod error;
pub mod fixtures;
pub mod generator;
pub mod graph;
pub mod hodge;
pub mod linalg;
pub mod quadrature;
pub mod quadruple;
pub mod report;
pub mod sampling;
pub mod sierpinski;
pub mod verify;

pub use error::{KirchhoffError, Result};
