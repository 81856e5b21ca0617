//! Numerical toolkit for degenerate matrix-weighted Sobolev spaces.
//!
//! The crate makes the objects of the degenerate embedding theory
//! computable: norms of explicit pairs `(f, ∇f)` under a matrix weight `Q`,
//! weight-class conditions (doubling, Muckenhoupt `A_p`, the two-weight
//! balance condition), finite-overlap quasimetric ball coverings, local
//! Poincaré/Sobolev inequality probes, and the explicit families that
//! witness failure of global compact embedding.
//!
//! Modules:
//! - [`geometry`]: box domains, balls, integration regions;
//! - [`fields`]: scalar/weight/matrix fields with singularity metadata;
//! - [`quadrature`]: adaptive graded quadrature with divergence verdicts;
//! - [`norms`]: weighted Lᵖ and degenerate Sobolev norms;
//! - [`cover`]: quasimetric axioms, geometric doubling, finite-overlap covers;
//! - [`weightclass`]: p-admissibility estimators;
//! - [`probes`]: Poincaré/Sobolev ratios and the compactness mechanism;
//! - [`counterexamples`]: the two explicit non-compactness families;
//! - [`builtins`]: named field families for the CLI and config files;
//! - [`report`]: curve containers with CSV export.

pub mod builtins;
pub mod counterexamples;
pub mod cover;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod norms;
pub mod probes;
pub mod quadrature;
pub mod report;
pub mod weightclass;

pub use error::{DivergenceVerdict, Error, Result};
pub use fields::{
    check_ellipticity, op_norm_weight, sqrt_apply, EllipticityCertificate, MatrixField,
    ScalarField, WeightField,
};
pub use geometry::{Ball, BoxDomain, Region, Seam, SingularFace};
pub use norms::{qh1p_norm, v_average, weighted_lp_norm, NormPart, NormReport};
pub use quadrature::{integrate, Grading, QuadOpts, QuadratureResult};
