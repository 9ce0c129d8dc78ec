//! Potential theory of the central walk.
//!
//! The Green kernel `G(x, y) = Σ_n p_n(x, y)` is summed exactly term by term
//! (see [`green_row`]) with a geometric tail estimate taken from ratios of
//! same-parity terms, so that period-2 walks with alternating zeros are
//! handled. Two Martin kernels are exposed:
//!
//! * [`martin_paper`]: `G(x, y) / G(x, ε)`, the value at `x` of
//!   `K_μ(p_y) = G_μ(p_y) G_μ(p_ε)^{-1}` (both factors are central, so the
//!   denominator is read at the same label);
//! * [`martin_std`]: the classical `G(x, y) / G(ε, y)`.
//!
//! They are related through `dim_q(x)² G_μ̄(x, y) = dim_q(y)² G_μ(y, x)`.
//! Boundary limits ([`martin_limit`]) use the classical kernel of the
//! reversed walk.

mod boundary;
mod green;
pub mod oracle;

use serde::Serialize;
use thiserror::Error;

use crate::fusion::{FusionError, FusionRing, ProbMeasure};
use crate::walk::WalkError;

pub use boundary::{
    martin_limit, poisson_triviality_test, transience_diagnostic, BoundaryReport,
    TestFunctionResult, Transience, TransienceReport, Triviality, TRIVIALITY_TOL,
};
pub use green::{
    green, green_nearest_neighbour, green_row, martin_paper, martin_std, GreenEntry, GreenMethod,
    GreenOptions, PotentialTable,
    CONVERGED_REL_TAIL, DEFAULT_MAX_TERMS,
};

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum PotentialError {
    #[error(transparent)]
    #[serde(serialize_with = "as_display")]
    Walk(#[from] WalkError),
    #[error("Green series for ({x},{y}) did not converge in {terms} terms (partial sum {partial_sum}, tail estimate {tail_estimate}); the walk may be recurrent")]
    NonConvergence {
        x: String,
        y: String,
        terms: usize,
        partial_sum: f64,
        tail_estimate: f64,
    },
    #[error("Martin kernel denominator G({x},{y}) = {value} is numerically zero")]
    DegenerateDenominator { x: String, y: String, value: f64 },
    #[error("the walk is recurrent; Martin kernels are undefined")]
    Recurrent,
    #[error("Martin kernel did not converge along the ray (sup-differences {history:?})")]
    MartinNotConverged { history: Vec<f64> },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn as_display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl From<FusionError> for PotentialError {
    fn from(e: FusionError) -> Self {
        PotentialError::Walk(WalkError::Fusion(e))
    }
}

/// `Σ_x x μ(x)` for a measure on an integer-labeled ring.
pub fn first_moment(ring: &FusionRing, mu: &ProbMeasure) -> Result<f64, PotentialError> {
    if !ring.is_integer_labeled() {
        return Err(PotentialError::InvalidInput(format!(
            "first moment needs integer labels, ring is {}",
            ring.kind_name()
        )));
    }
    mu.check_ring(ring)?;
    Ok(mu
        .iter()
        .map(|(x, w)| f64::from(x.index().expect("integer label")) * w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{FiniteGroup, Label};

    #[test]
    fn first_moments() {
        let r = FusionRing::su2(2.5).unwrap();
        assert_eq!(first_moment(&r, &ProbMeasure::point(Label::Index(1))).unwrap(), 1.0);
        let mu = ProbMeasure::parse_compact("1:0.5,2:0.5").unwrap();
        assert_eq!(first_moment(&r, &mu).unwrap(), 1.5);
        assert_eq!(first_moment(&r, &ProbMeasure::point(r.epsilon())).unwrap(), 0.0);
        let z3 = FusionRing::group_dual(FiniteGroup::cyclic(3).unwrap());
        assert!(first_moment(&z3, &ProbMeasure::point(Label::Index(1))).is_err());
    }
}
