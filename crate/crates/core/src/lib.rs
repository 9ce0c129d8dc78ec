//! Central random walks on duals of compact quantum groups.
//!
//! The crate works at the level of fusion rings: a compact quantum group is
//! seen through its irreducible classes, fusion multiplicities and quantum
//! dimensions. On top of that it provides
//!
//! * [`fusion`]: fusion rings (SU(2)-type, SO(3)-type, finite group duals,
//!   products) and probability measures on their labels;
//! * [`walk`]: the central random walk of a measure, exact n-step laws,
//!   generation and periodicity checks;
//! * [`potential`]: Green and Martin kernels, transience diagnostics, Martin
//!   limits along rays and Cesàro tests for bounded harmonic functions;
//! * [`moneq`]: the linear algebra of `A_o(F)` and `A_aut(D, ω)`, their
//!   monoidal-equivalence invariants and normal-form partners;
//! * [`cli`]: the `fusionwalk` command-line front end.


pub mod cli;
pub mod fusion;
pub mod moneq;
pub mod potential;
pub mod walk;

pub use fusion::{FusionError, FusionRing, Label, ProbMeasure};
pub use walk::{CentralWalk, Generation, WalkError};
