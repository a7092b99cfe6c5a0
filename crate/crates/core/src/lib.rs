//! Numerical evaluation of the nonlinear fractional derivative `D^alpha f`,
//! its `L^p` variant, the Riesz potential `I_alpha`, the composed operator
//! `(1 - alpha) I_alpha(D^alpha f)` and the Gagliardo seminorm, together with
//! harnesses that track these quantities as `alpha -> 1-` and compare them
//! with their gradient limits `K_n |grad f|`, `K_n I_1(|grad f|)` and
//! `K_n ||grad f||_1`.
//!
//! Every singular integral is split the same way: an analytic first-order
//! Taylor core around the singularity, dyadic radial shells with
//! Gauss-Legendre nodes, a sphere rule for the angular part and an analytic
//! far tail.

pub mod error;
pub mod fields;
pub mod gauss;
pub mod geometry;
pub mod limits;
pub mod operators;
pub mod quadrature;
pub mod reduce;
pub mod special;

pub use error::{Error, Result};
pub use fields::{FieldSpec, Smoothness, TestField};
pub use geometry::Point;
pub use limits::{AlphaSchedule, AuditReport, RateFit, SweepReport, SweepRow};
pub use operators::{DecayingFunction, InnerCache};
pub use quadrature::{OperatorValue, QuadratureSpec, SphereRule, TailPolicy};
