//! Numerical verification of shift-of-argument integrability for adjoint
//! orbits of U(n) and their real suborbits SO(n)/(SO(n₁)×⋯×SO(n_p)).

pub mod bridge;
pub mod cli;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod invariants;
pub mod lie;
pub mod moment;
pub mod pencil;
pub mod roots;
pub mod sampling;
pub mod setup;
pub mod subspace;
pub mod witness;

pub use error::{Error, Result};
pub use lie::{bracket, pairing, sigma, LieElement};
pub use setup::{AlgebraPair, OrbitSetup, Space};
pub use subspace::{ComplexSubspace, RankRule, RealSubspace, Subspace};
