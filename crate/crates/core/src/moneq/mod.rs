//! Linear algebra of the two example families `A_o(F)` and `A_aut(D, ω)`.
//!
//! Both families are classified up to monoidal equivalence by a single real
//! number (plus a sign for `A_o`), and every member is monoidally equivalent
//! to a normal form: `SU_q(2) = A_o(F_q)` for `A_o(F)`, and
//! `A_aut(M_2(ℂ), Tr(· F))` with diagonal `F` for `A_aut(D, ω)`. Monoidal
//! equivalence preserves fusion rules and quantum dimensions, so the central
//! walks of equivalent quantum groups coincide under the identity bijection
//! of labels; [`walk_of`] builds those walks.

mod aof;
mod aut;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{FusionError, FusionRing, ProbMeasure};
use crate::walk::{CentralWalk, WalkError};

pub use aof::{
    decide_moneq_ao, fq_matrix, iso_invariant, su2_partner, validate_aof, AoFMatrix,
    IsoInvariant, AO_SIGN_TOL, EIG_TOL, T_TOL,
};
pub use aut::{
    aut_normal_form, decide_moneq_aut, delta_form, multiplication_tensor, AlgebraSpec, Block,
    DeltaForm, MultiplicationTensor, DELTA_FORM_TOL,
};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoneqError {
    #[error("matrix is not square ({rows}×{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("F F̄ is not ±1 (residual {residual:e})")]
    NotPlusMinusOne { residual: f64 },
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("state is not normalized: Σ Tr(F_i) = {total}")]
    StateNotNormalized { total: f64 },
    #[error("state is not a δ-form (defect {defect:e})")]
    NotDeltaForm { defect: f64 },
    #[error("algebra dimension {dim} is below 4")]
    DimensionTooSmall { dim: usize },
    #[error("A_o(F) needs F of size n ≥ 2, got {n}")]
    AoTooSmall { n: usize },
    #[error("no M_2 normal form for δ² = {delta2} < 4")]
    NoNormalForm { delta2: f64 },
    #[error("malformed matrix: {0}")]
    Malformed(String),
    #[error("numerical invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// JSON form of a complex matrix: `{"re":[[…]],"im":[[…]]}`; `im` may be
/// omitted for real matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix, MoneqError> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if self.re.iter().any(|r| r.len() != cols) {
            return Err(MoneqError::Malformed("ragged real part".into()));
        }
        if let Some(im) = &self.im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(MoneqError::Malformed(
                    "imaginary part has a different shape".into(),
                ));
            }
        }
        if self.re.iter().flatten().any(|v| !v.is_finite())
            || self.im.iter().flatten().flatten().any(|v| !v.is_finite())
        {
            return Err(MoneqError::Malformed("non-finite entry".into()));
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            C64::new(self.re[i][j], im)
        }))
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let re = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
            .collect();
        let im: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
            .collect();
        let real = im.iter().flatten().all(|v| *v == 0.0);
        Self {
            re,
            im: (!real).then_some(im),
        }
    }
}

/// Either family, as input to [`walk_of`] and [`amenability_flags`].
#[derive(Clone, Debug)]
pub enum QuantumGroupInput {
    Ao(AoFMatrix),
    Aut(AlgebraSpec),
}

/// The central walk of `A_o(F)` (su2 ring, `t = Tr(F*F)`) or of
/// `A_aut(D, ω)` (so3 ring with the computed `δ²`). Labels are identified
/// with ℕ in both cases, so the bijection between monoidally equivalent
/// quantum groups is the identity.
pub fn walk_of(input: &QuantumGroupInput, mu: &ProbMeasure) -> Result<CentralWalk, MoneqError> {
    let ring = ring_of(input)?;
    Ok(CentralWalk::new(ring, mu.clone())?)
}

pub fn ring_of(input: &QuantumGroupInput) -> Result<FusionRing, MoneqError> {
    match input {
        // Tr(F*F) ≥ 2 always; clamp rounding below the Kac value
        QuantumGroupInput::Ao(a) => Ok(FusionRing::su2(a.t().max(2.0))?),
        QuantumGroupInput::Aut(d) => {
            let df = delta_form(d)?;
            if !df.is_delta_form {
                return Err(MoneqError::NotDeltaForm { defect: df.defect });
            }
            // rounding may put the Kac value just below 4
            let d2 = if (4.0 - DELTA_FORM_TOL * 4.0..4.0).contains(&df.delta2) {
                4.0
            } else {
                df.delta2
            };
            Ok(FusionRing::so3(d2)?)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmenabilityFlags {
    pub coamenable: bool,
    pub kac_type: bool,
    pub note: String,
}

/// `A_o(F)` (n ≥ 2) is coamenable iff `n = 2`; `A_aut(D, ω)` iff `dim D ≤ 4`.
pub fn amenability_flags(input: &QuantumGroupInput) -> Result<AmenabilityFlags, MoneqError> {
    Ok(match input {
        QuantumGroupInput::Ao(a) => {
            let n = a.n();
            AmenabilityFlags {
                coamenable: n <= 2,
                kac_type: (a.t() - n as f64).abs() <= T_TOL,
                note: if n <= 2 {
                    "A_o(F) with n = 2 is SU_q(2) up to isomorphism; its dual is amenable".into()
                } else {
                    "A_o(F) with n >= 3: the dual is not amenable".into()
                },
            }
        }
        QuantumGroupInput::Aut(d) => {
            let dim = d.total_dimension();
            let kac = d.is_trace_state();
            AmenabilityFlags {
                coamenable: dim <= 4,
                kac_type: kac,
                note: if dim <= 4 {
                    format!("A_aut of a {dim}-dimensional algebra is coamenable")
                } else {
                    format!("A_aut of a {dim}-dimensional algebra is not coamenable")
                },
            }
        }
    })
}

/// Maximal Kac-type subgroup of the normal form `A_aut(M_2(ℂ), Tr(· F))`,
/// recorded as metadata (not computed).
pub fn normal_form_kac_subgroup(delta2: f64) -> &'static str {
    if (delta2 - 4.0).abs() <= DELTA_FORM_TOL {
        "SO(3) (the normal form is already of Kac type)"
    } else {
        "T (one-dimensional torus)"
    }
}

/// `ψ(A) = Tr(QA)/Tr(Q)` and `φ(A) = Tr(Q⁻¹A)/Tr(Q⁻¹)` for positive `Q`.
pub fn q_matrix_states(q: &CMatrix, a: &CMatrix) -> Result<(C64, C64), MoneqError> {
    aut::check_positive(q)?;
    if a.shape() != q.shape() {
        return Err(MoneqError::Malformed(format!(
            "A is {:?}, Q is {:?}",
            a.shape(),
            q.shape()
        )));
    }
    let qinv = q.clone().try_inverse().ok_or(MoneqError::Singular)?;
    let psi = (q * a).trace() / q.trace();
    let phi = (&qinv * a).trace() / qinv.trace();
    Ok((psi, phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> CMatrix {
        let n = rows.len();
        let m = rows[0].len();
        CMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j], 0.0))
    }

    #[test]
    fn states_of_q_matrix() {
        let q = real(&[&[2.0, 0.0], &[0.0, 0.5]]);
        let a = real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let (psi, phi) = q_matrix_states(&q, &a).unwrap();
        assert!((psi - C64::new(0.8, 0.0)).norm() < 1e-15);
        assert!((phi - C64::new(0.2, 0.0)).norm() < 1e-15);
        let id = CMatrix::identity(2, 2);
        let (psi, phi) = q_matrix_states(&q, &id).unwrap();
        assert!((psi.re - 1.0).abs() < 1e-15 && (phi.re - 1.0).abs() < 1e-15);
        // ψ for Q equals φ for Q⁻¹
        let qi = q.clone().try_inverse().unwrap();
        let (psi_q, _) = q_matrix_states(&q, &a).unwrap();
        let (_, phi_qi) = q_matrix_states(&qi, &a).unwrap();
        assert!((psi_q - phi_qi).norm() < 1e-15);
        assert!(q_matrix_states(&real(&[&[1.0, 0.0], &[0.0, -1.0]]), &id).is_err());
    }

    #[test]
    fn matrix_json_round_trip() {
        let j: MatrixJson = serde_json::from_str(r#"{"re":[[0,1],[1,0]],"im":[[0,0.5],[-0.5,0]]}"#).unwrap();
        let m = j.to_matrix().unwrap();
        assert_eq!(m[(0, 1)], C64::new(1.0, 0.5));
        assert_eq!(MatrixJson::from_matrix(&m), j);
        let bad: MatrixJson = serde_json::from_str(r#"{"re":[[0,1],[1]]}"#).unwrap();
        assert!(bad.to_matrix().is_err());
    }

    #[test]
    fn amenability() {
        let three = validate_aof(&real(&[
            &[0.0, 0.0, 2f64.sqrt()],
            &[0.0, 1.0, 0.0],
            &[1.0 / 2f64.sqrt(), 0.0, 0.0],
        ]))
        .unwrap();
        let f = amenability_flags(&QuantumGroupInput::Ao(three)).unwrap();
        assert!(!f.coamenable && !f.kac_type);
        let c4 = AlgebraSpec::commutative(&[0.25; 4]).unwrap();
        assert!(amenability_flags(&QuantumGroupInput::Aut(c4)).unwrap().coamenable);
        let m3 = AlgebraSpec::matrix(CMatrix::identity(3, 3).map(|v| v / C64::new(3.0, 0.0))).unwrap();
        let f = amenability_flags(&QuantumGroupInput::Aut(m3)).unwrap();
        assert!(!f.coamenable && f.kac_type);
        let id2 = validate_aof(&CMatrix::identity(2, 2)).unwrap();
        let f = amenability_flags(&QuantumGroupInput::Ao(id2)).unwrap();
        assert!(f.coamenable && f.kac_type);
    }

    #[test]
    fn walks_of_examples() {
        use crate::fusion::Label;
        let one = ProbMeasure::point(Label::Index(1));
        let c4 = AlgebraSpec::commutative(&[0.25; 4]).unwrap();
        let w = walk_of(&QuantumGroupInput::Aut(c4.clone()), &one).unwrap();
        for (y, p) in [(0, 1.0 / 9.0), (1, 3.0 / 9.0), (2, 5.0 / 9.0)] {
            let got = w.transition_prob(&Label::Index(1), &Label::Index(y)).unwrap();
            assert!((got - p).abs() < 1e-12);
        }
        // the normal form of C^4 has δ² a few ulps below 4
        let nf = aut_normal_form(&c4).unwrap();
        let w2 = walk_of(&QuantumGroupInput::Aut(nf), &one).unwrap();
        assert_eq!(w2.ring().so3_parameter(), Some(4.0));

        let id = validate_aof(&CMatrix::identity(2, 2)).unwrap();
        let w = walk_of(&QuantumGroupInput::Ao(id), &one).unwrap();
        assert_eq!(w.ring().su2_parameter(), Some(2.0));
    }

    #[test]
    fn kac_metadata() {
        assert!(normal_form_kac_subgroup(4.0).starts_with("SO(3)"));
        assert!(normal_form_kac_subgroup(5.0).starts_with('T'));
    }
}
