//! Jet algebra, Glaeser refinement of affine bundles, Whitney extension and
//! finiteness checks for `C^m` solvability of `Σ φ_i f_i = φ` on finite sets.
//!
//! The usual pipeline builds a [`Bundle`] from data ([`Bundle::from_bhk`],
//! [`Bundle::from_interpolation`]), runs [`decide`] to refine it to a fixpoint
//! and classify it, and, when a section exists, feeds a selection of jets to
//! [`extend`] to obtain an evaluable function.

pub mod bundles;
pub mod error;
pub mod finiteness;
pub mod glaeser;
pub mod jets;
pub mod lift;
pub mod linalg;
pub mod linspaces;
pub mod modulus;
mod subsets;
pub mod whitney;

pub use bundles::{BhkInstance, Bundle};
pub use error::{Error, Result};
pub use finiteness::{
    convexity_check, finiteness_scan, subset_feasibility, Constraints, ConvexityOutcome, ScanResult,
    SubsetCertificate, WhitneyConvexSet,
};
pub use glaeser::{decide, refine_bundle, stabilize, RefinementConfig, Status, Verdict};
pub use jets::{basis, scalar_dim, Jet, JetShape, JetVec, MultiIndex, Polynomial};
pub use lift::{lift_jet, lift_submodule, unlift};
pub use linspaces::{affine_intersect, is_submodule, submodule_closure, submodule_core, AffineFiber, LinSubspace};
pub use modulus::RegularModulus;
pub use whitney::{extend, select_section, whitney_seminorm, DomainBox, ExtensionFunction, JetField};
