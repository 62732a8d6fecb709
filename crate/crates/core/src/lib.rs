//! Single-excitation dynamics of quantum emitters coupled to a Hatano-Nelson
//! lattice, a 1D tight-binding chain with unequal left and right hopping.

// Comparisons such as `!(x > 0.0)` are written so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bordered;
pub mod effective;
pub mod error;
pub mod evolution;
pub mod hyperbolic;
pub mod model;
pub mod oracle;
pub mod selfenergy;
pub mod spectra;

pub use error::{Error, Result};
pub use evolution::{
    evolve, extract_observables, gauge_transform, initial_state, light_cone_guard, IntegratorConfig, Method,
    Observable, Series, StateVector, Trajectory,
};
pub use model::{
    assemble_hamiltonian, classify_regime, derive_parameters, matching_ratio, validate_spec, Boundary,
    CouplingPoint, DerivedParameters, EmitterSpec, HamiltonianOperator, LatticeSpec, Regime, SystemSpec, Violation,
};
pub use num_complex::Complex64;
