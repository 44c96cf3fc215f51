//! Numerical toolkit for the σ_k curvature operator on hypersurfaces of
//! hyperbolic space.
//!
//! - [`symfun`]: elementary symmetric functions, their minors, quotients and
//!   directional Hessians.
//! - [`cones`]: seeded samplers for strata of the Garding cones Γ_k and a
//!   local falsification search.
//! - [`lemma_lab`]: one checker per algebraic inequality or identity, each
//!   producing a [`LemmaReport`].
//! - [`hygeo`]: half-space-model geometry of graphs `z_{n+1} = u(x)`.
//! - [`plateau`]: radial asymptotic Plateau solver with ε-continuation.

pub mod cones;
pub mod error;
pub mod hygeo;
pub mod lemma_lab;
pub mod plateau;
pub mod symfun;
pub mod tolerances;

pub use cones::{SampleSpec, Stratum};
pub use error::{Error, Result};
pub use hygeo::{GraphField, ShapeData};
pub use lemma_lab::{LemmaId, LemmaReport, Verdict};
pub use plateau::{RadialProfile, SolverConfig};
pub use symfun::{CurvatureVector, DirectionVector, Form, SymBundle};

/// Binomial coefficient `C(n, k)` as a float; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

#[cfg(test)]
mod tests {
    use super::binomial;

    #[test]
    fn binomial_small_table() {
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(8, 8), 1.0);
    }
}
