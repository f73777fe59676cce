//! Volumes of sublevel sets of positive definite forms.
//!
//! The crate works with even-degree forms g ∈ H_{d,n} that are non-negative
//! on ℝⁿ, and with the volume functional f(g) = vol{x : g(x) ≤ 1}. Around
//! that functional it provides:
//!
//! - `form`: sparse forms, the Bombieri inner product, and the Veronese
//!   embedding θ_ℓ = (ℓᵀx)^d with its reproducing property ⟨θ_ℓ, g⟩ = g(ℓ);
//! - `gauss`: Gaussian moment matrices M_d[Q] whose inverses are Gram
//!   matrices of (xᵀQx)^{d/2}, with an exact-rational verification path;
//! - `volume`: deterministic Monte Carlo estimators for f and its weighted
//!   and directional-derivative variants, plus closed forms for quadratics;
//! - `sos`: Gram-matrix representations of sums of squares and pseudo-moment
//!   functionals;
//! - `finiteness`: exact classification of binary forms (finite vs infinite
//!   volume from real-zero orders) and a numeric genericity check for n ≥ 3;
//! - `mc`: the sharded, byte-deterministic sampling engine underneath it all.

pub mod error;
pub mod finiteness;
pub mod form;
pub mod gauss;
pub mod index;
pub mod matrix;
pub mod mc;
pub mod quad;
pub mod random;
pub mod ratpoly;
pub mod scalar;
pub mod sos;
pub mod special;
pub mod volume;

pub use error::{Error, Result};
pub use finiteness::{
    binary_volume_quadrature, binary_volume_quadrature_f64, classify_binary,
    finiteness_diagnostic, generic_check, rationalize, Classification, DiagnosticReport,
    DiagnosticStage, DiagnosticVerdict, GenericConfig, Verdict, ZeroEntry,
};
pub use form::{EvalForm, Form, FormRepr, Poly, TermRepr};
pub use gauss::{
    expand_power_quadratic, gaussian_like_moment_mc, gaussian_moment, gram_identity_residual,
    gram_identity_residual_exact, k_constant, moment_matrix, moment_matrix_exact, partition_mass,
    sigma_d, sigma_pow_d_exact, sphere_measure_moment_mc, CovSpec, GramResidual, MomentMatrix,
};
pub use index::{monomial_basis, MonomialBasis, MultiIndex};
pub use matrix::{MatrixRepr, RatMatrix, SymMatrix};
pub use mc::{default_shards, Estimate, McConfig};
pub use quad::tanh_sinh;
pub use ratpoly::{isolate_real_roots, RatPoly, RootLoc};
pub use scalar::Coeff;
pub use random::{random_form_bombieri, random_orthogonal, random_pd_form, random_pd_matrix};
pub use sos::{
    gram_to_form, nesterov_gram, pseudo_moment_matrix, rank_one_theta, sos_volume, GramForm,
    GramFormRepr, PseudoMomentFunctional, PsdReport,
};
pub use special::{gamma, sphere_surface_area};
pub use volume::{
    cm_check, directional_derivative_mc, hsos_quadratic_closed, l1_norm, l2_norm,
    l2l1_extremal_check, l2l1_margin, laplace_path_check, quadratic_matrix, signed_derivative_mc,
    volume_mc, volume_quadratic_closed, weighted_volume_mc, CmReport, DerivativeReport,
    L2L1Report, LaplaceReport, MarginEstimate, VolumeEstimate,
};
