//! The nonlocal operators: `D^alpha_p`, its truncation, the Riesz potential,
//! the composed operator `(1 - alpha)^{1/p} I_alpha(D^alpha_p f)`, Gagliardo
//! seminorms, the cube Poincare sides and the Leibniz balance.
//!
//! Every value comes with an a-posteriori error estimate: the difference to
//! the same computation at halved resolution, plus the bound on the part
//! replaced by a Taylor surrogate and the envelope of any neglected tail.

mod composed;
mod derivative;
mod engine;
mod riesz;
mod seminorm;

pub use composed::{bbm_operator, bbm_operator_p, ComposedValue, InnerCache};
pub use derivative::{frac_derivative, frac_derivative_p, frac_derivative_truncated};
pub use riesz::{riesz_of_gradient, riesz_potential, DecayingFunction};
pub use seminorm::{
    bbm_poincare_sides, gagliardo_seminorm, gagliardo_seminorm_p, leibniz_gap, LeibnizGap,
    PoincareSides,
};
