//! Chiral continuous-time quantum-walk routing on a complete-graph network.
//!
//! The router is a complete graph on `n + 1` internal vertices, each attached
//! to one external port. A single internal link carries a weight `β` and a
//! chiral phase `φ`; tuning them steers a walker from the input port to a
//! chosen output. Symmetry collapses the `2(n + 1)`-vertex graph onto a fixed
//! 6-dimensional reduced basis, so `n` enters only as a parameter.
//!
//! Modules:
//! - [`hamiltonian`]: full and reduced Hamiltonians and the isometry between them.
//! - [`dynamics`]: unitary propagation via Hermitian eigendecomposition.
//! - [`routing`]: transition probabilities and state fidelities.
//! - [`noise`]: von Mises static disorder and Ornstein–Uhlenbeck phase noise.
//! - [`search`]: parameter scans, peak detection and local refinement.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
mod error;
pub mod hamiltonian;
pub mod noise;
pub mod quadrature;
pub mod routing;
pub mod search;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use dynamics::{
    evolve, evolve_piecewise, propagator, reduction_deviation, Propagator, PureState, Spectrum,
};
pub use hamiltonian::{
    build_full_hamiltonian, build_reduced_hamiltonian, reduction_isometry, FullGraphLayout,
    HermitianMatrix, ReducedLabel, RouterParams,
};
pub use routing::{DensityMatrix, SuperpositionGrid, SuperpositionParams};
