//! Quantum thermodynamics without a reference temperature.
//!
//! Every state carries its own thermodynamic labels: the intrinsic inverse
//! temperature of its iso-entropic class, the bound energy locked in that
//! class, and the free energy that entropy-preserving operations can
//! extract. On top of these the crate provides heat and work accounting,
//! the second-law inequalities as checkable predicates, energy-entropy
//! diagram geometry, asymptotic interconversion rates and the extension to
//! several commuting conserved charges.
//!
//! Units: natural logarithms throughout, `k_B = 1`, temperatures in energy
//! units.

pub mod charges;
pub mod diagram;
pub mod energetics;
pub mod equilibrium;
mod error;
pub mod gibbs;
pub mod operators;
pub mod processes;
pub mod quadrature;
pub mod random;
pub mod resource;
pub mod roots;

pub use error::{Error, ErrorKind, Result};
pub use gibbs::{Beta, GibbsFamily};
pub use operators::{DensityMatrix, HermitianOperator, SubsystemSplit};
