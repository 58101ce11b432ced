//! Canonical forms and complete invariants for integral twisted conjugacy
//! classes in the formal loop group `GL_n((z))`.
//!
//! A loop `a(z)` acts on itself by twisted conjugation
//! `g : a ↦ g(qz)·a(z)·g(z)⁻¹`. For `|q| < 1` the integral classes (those
//! containing a power series with invertible constant term) are in bijection
//! with degree-zero semistable rank-`n` vector bundles on the elliptic curve
//! `E = C*/q^Z`. This crate computes that correspondence end to end:
//!
//! 1. [`align`] conjugates a power series into the finite aligned normal form
//!    `a0·exp(x_1 z)·…·exp(x_K z^K)`.
//! 2. [`resonance`] recognizes eigenvalue relations with `q` and extracts a
//!    cocharacter and covering order.
//! 3. [`descent`] passes to the `m`-fold cover and reaches a reduced constant
//!    multiplier together with its finite-order companion.
//! 4. [`invariant`] reads off the multiset of `(point of E, Jordan size)`.
//!
//! [`intertwiner`] is an independent bounded-support solver for
//! `g(qz)·a(z) = ã(z)·g(z)` used to certify all of the above.

pub mod align;
pub mod config;
pub mod descent;
pub mod error;
pub mod intertwiner;
pub mod invariant;
pub mod json;
pub mod lattice;
pub mod linalg;
pub mod resonance;
pub mod series;
pub mod spectral;
pub mod testkit;

pub use align::{align, check_integral, triangularize, AlignedForm};
pub use config::{ModulusConfig, ToleranceConfig};
pub use descent::{descend, galois_cocycle, DescentData};
pub use error::{Error, Result};
pub use intertwiner::{certificate_conjugator, hom_dimension_measured, solve_intertwiners, support_bound, SolutionSpace};
pub use invariant::{
    atiyah_data, classify, classify_full, dual_data, equivalent, hom_dimension_formula, sum_data, synthesize, tensor_data,
    Classification, EPoint, EllipticInvariant, InvariantEntry,
};
pub use lattice::{lattice_split, LatticeSplit};
pub use resonance::{gamma_recognize, is_reduced, resonance_analyze, GammaExponent, ResonanceData};
pub use series::LaurentMatrix;
pub use spectral::{jordan_decomposition, joint_block_decomposition, weight_decomposition};
pub use spectral::{JointBlock, JordanData, WeightData};

/// Complex scalar used for every matrix coefficient.
pub type Complex = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex>;
