//! Wiener loop measures on SU(2): the heat kernel, bridge sampling, the `S^2`
//! projection and asymptotic-invariance probes.

pub mod bridge;
pub mod heat;
pub mod project;

pub use bridge::{endpoint_law_check, project_su2, sample_bridge, BridgeSampler, LoopPath};
pub use heat::{semigroup_check, AngleSampler, HeatKernel};
pub use project::{invariance_bound, project_s2, refit_path, LoopTransform};
