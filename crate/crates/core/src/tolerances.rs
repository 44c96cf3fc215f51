//! Fixed tolerances shared by the checkers, the solver and the tests.

/// Exact identities (f11k12, the q_2 Hessian identity, the minor quotient identity).
pub const IDENTITY_REL: f64 = 1e-10;

/// Inequalities, relative to the larger absolute side.
pub const INEQUALITY_REL: f64 = 1e-9;

/// Monotone chain of first partials of σ_k.
pub const PARTIAL_ORDER_REL: f64 = 1e-12;

/// Largest admissible eigenvalue of the Hessian of q_k, relative to its spectral radius.
pub const CONCAVITY_REL: f64 = 1e-8;

/// Empirical constants must move by less than this fraction when the sample count doubles.
pub const DOUBLING_STABILITY: f64 = 0.10;

/// Witness re-evaluation tolerance.
pub const WITNESS_REL: f64 = 1e-12;

/// Scale helper: `max(1, |x|)`.
pub fn unit_scale(x: f64) -> f64 {
    x.abs().max(1.0)
}

/// Relative difference `|a - b| / max(1, |a|, |b|)`.
pub fn rel_residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
