//! Numerical toolkit for the energy/area inequality of harmonic maps from
//! surfaces into `R^n`.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: pointwise differential geometry from second-order jets
//!   (fundamental forms, principal curvatures, pullback frame, stretch factors).
//! - [`analytic`]: closed-form map families with exact jets.
//! - [`solver`]: discrete harmonic maps from Dirichlet data (5-point Laplace
//!   equation, conjugate gradients) and finite-difference jet extraction.
//! - [`functionals`]: energy, image area, curvature functional, pointwise
//!   identity residuals and the verification report.
//!
//! Data-parallel loops go through [`Exec`]; with the `parallel` feature
//! disabled every path runs sequentially and produces identical results.

pub mod analytic;
pub mod exec;
pub mod functionals;
pub mod geometry;
pub mod grid;
pub mod gridio;
pub mod quadrature;
pub mod solver;

pub use analytic::{AnalyticFamily, DomainShape, DomainSpec, Family};
pub use exec::Exec;
pub use functionals::{
    verify_chain, MaskReason, PointReport, Thresholds, Verdict, VerificationReport,
};
pub use geometry::{
    classify_point, curvature_ratio_factor, first_form, gauss_curvature, principal_curvatures,
    pullback_frame, second_form, CurvatureFrame, FirstForm, GeometryError, Jet2, ParamPoint,
    PointClass, PrincipalCurvatures, SecondForm,
};
pub use grid::{JetField, TensorGrid};
pub use solver::{BoundaryData, DiscreteMap, SolverError};
