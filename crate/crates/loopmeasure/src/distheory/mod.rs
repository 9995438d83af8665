//! Reference laws, quadrature, the Cartan coordinates of the `S^2` case and the
//! spectral checks of its diagonal law.

pub mod cartan;
pub mod density;
pub mod quad;
pub mod spectral;

pub use density::{DensityTag, ReferenceDensity};
pub use quad::{integrate, integrate_to_infinity, QuadResult, Quadrature};
