//! Numerical toolkit for two-dimensional canonical systems `y' = zJHy`.
//!
//! Models are lowered to piecewise-constant Hamiltonians ([`pieces::Pieces`])
//! on which det Omega, the compatible pair, the kernel `K_H(t; r)`, the greedy
//! partition count `kappa_H(r)` and the fundamental solution are computed
//! with closed-form per-piece algebra.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod compatible;
pub mod error;
pub mod examples;
pub mod hamiltonian;
pub mod io;
pub mod kernel;
pub mod mat;
pub mod par;
pub mod partition;
pub mod pieces;
pub mod quad;
pub mod spectrum;

pub use compatible::CompatiblePair;
pub use error::{Error, Result};
pub use hamiltonian::{Body, DiagFn, HamiltonianModel, Lowering, Phi, PhiFamily};
pub use kernel::KernelEval;
pub use mat::SymMat2;
pub use partition::PartitionResult;
pub use spectrum::{SpectrumResult, Transfer2};
