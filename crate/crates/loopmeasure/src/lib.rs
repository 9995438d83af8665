//! Birkhoff factorization of matrix loops, closed-form group actions in
//! factorization coordinates, Wiener loop sampling on SU(2) and S^2, and the
//! reference laws those samples are tested against.
//!
//! The algebraic core ([`mat`], [`loopalg`], [`birkhoff`], [`actions`],
//! [`random`]) is generic over the real scalar type. The statistical layers
//! ([`sampler`], [`distheory`], [`harness`]) work in `f64`.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod birkhoff;
pub mod distheory;
pub mod error;
pub mod harness;
pub mod loopalg;
pub mod mat;
pub mod random;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, C};

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision dense matrix.
pub type Mat64 = mat::Mat<f64>;
/// Double-precision truncated loop.
pub type Loop64 = loopalg::TruncatedLoop<f64>;
/// Double-precision Birkhoff factors.
pub type Factors64 = birkhoff::BirkhoffFactors<f64>;
/// Double-precision factorization coordinates.
pub type Coords64 = birkhoff::RhCoords<f64>;
/// Double-precision SL(2) parameter.
pub type Moebius64 = actions::MoebiusParam<f64>;
/// Double-precision root embedding.
pub type Embedding64 = actions::RootEmbedding<f64>;
/// Double-precision involution data.
pub type Involution64 = loopalg::InvolutionConfig<f64>;
