use serde::Serialize;

use super::{CMatrix, MoneqError, C64};

/// Residual allowed in `F F̄ = ±1`.
pub const AO_SIGN_TOL: f64 = 1e-10;
/// Eigenvalue tolerance for isomorphism classification.
pub const EIG_TOL: f64 = 1e-8;
/// Tolerance on `Tr(F*F)` for monoidal equivalence.
pub const T_TOL: f64 = 1e-9;

const INVERSION_TOL: f64 = 1e-9;

/// A validated `A_o(F)` datum with its derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct AoFMatrix {
    f: CMatrix,
    sign: i8,
    q: CMatrix,
    eigenvalues: Vec<f64>,
    t: f64,
}

impl AoFMatrix {
    pub fn f(&self) -> &CMatrix {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    /// `s` with `F F̄ = s·1`.
    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// `Q = F*F`.
    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    /// Eigenvalues of `F*F`, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `Tr(F*F)`, the quantum dimension of the fundamental representation.
    pub fn t(&self) -> f64 {
        self.t
    }
}

/// Checks `F F̄ = ±1` and derives sign, `Q = F*F`, its spectrum and trace.
pub fn validate_aof(f: &CMatrix) -> Result<AoFMatrix, MoneqError> {
    let (rows, cols) = f.shape();
    if rows != cols || rows == 0 {
        return Err(MoneqError::NotSquare { rows, cols });
    }
    let n = rows;
    if n < 2 {
        return Err(MoneqError::AoTooSmall { n });
    }
    let sv = f.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-12 * smax.max(1e-300)) {
        return Err(MoneqError::Singular);
    }

    let ffbar = f * f.map(|z| z.conj());
    let sign: i8 = match ffbar[(0, 0)].re.round() {
        s if s == 1.0 => 1,
        s if s == -1.0 => -1,
        _ => {
            return Err(MoneqError::NotPlusMinusOne {
                residual: (ffbar[(0, 0)] - C64::new(1.0, 0.0)).norm(),
            })
        }
    };
    let target = CMatrix::identity(n, n) * C64::new(f64::from(sign), 0.0);
    let residual = (&ffbar - target).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > AO_SIGN_TOL {
        return Err(MoneqError::NotPlusMinusOne { residual });
    }

    let q = f.adjoint() * f;
    let mut eigenvalues: Vec<f64> = q.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let t = q.trace().re;

    for (a, b) in eigenvalues.iter().zip(eigenvalues.iter().rev()) {
        if (a * b - 1.0).abs() > INVERSION_TOL * (1.0 + a * b) {
            return Err(MoneqError::Invariant(format!(
                "spectrum of F*F not closed under inversion ({a} · {b} != 1)"
            )));
        }
    }
    let t_inv: f64 = eigenvalues.iter().map(|l| 1.0 / l).sum();
    if (t - t_inv).abs() > INVERSION_TOL * t {
        return Err(MoneqError::Invariant(format!(
            "Tr(Q) = {t} but Tr(Q^-1) = {t_inv}"
        )));
    }
    Ok(AoFMatrix {
        f: f.clone(),
        sign,
        q,
        eigenvalues,
        t,
    })
}

/// Isomorphism class of `A_o(F)`: `n`, the sign of `F F̄` and the spectrum
/// of `F*F`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsoInvariant {
    pub n: usize,
    pub sign: i8,
    pub eigenvalues: Vec<f64>,
}

impl IsoInvariant {
    pub fn isomorphic(&self, other: &IsoInvariant) -> bool {
        self.n == other.n
            && self.sign == other.sign
            && self
                .eigenvalues
                .iter()
                .zip(&other.eigenvalues)
                .all(|(a, b)| (a - b).abs() <= EIG_TOL)
    }
}

pub fn iso_invariant(a: &AoFMatrix) -> IsoInvariant {
    IsoInvariant {
        n: a.n(),
        sign: a.sign,
        eigenvalues: a.eigenvalues.clone(),
    }
}

/// The `q ∈ [−1, 1] \ {0}` with `A_o(F) ≃ A_o(F_q) = SU_q(2)` monoidally:
/// `|q| + 1/|q| = Tr(F*F)` and, since `F_q F̄_q = −sgn(q)·1`, `q < 0`
/// exactly when `F F̄ = +1`.
pub fn su2_partner(a: &AoFMatrix) -> f64 {
    let t = a.t.max(2.0);
    // (t − √(t²−4))/2 written as 2/(t + √(t²−4)) to avoid cancellation
    let abs_q = 2.0 / (t + (t * t - 4.0).max(0.0).sqrt());
    debug_assert!(abs_q > 0.0 && abs_q <= 1.0);
    if a.sign > 0 {
        -abs_q
    } else {
        abs_q
    }
}

/// `F_q = [[0, |q|^{1/2}], [−sgn(q)|q|^{−1/2}, 0]]`.
pub fn fq_matrix(q: f64) -> Result<CMatrix, MoneqError> {
    if !(q != 0.0 && q.abs() <= 1.0) {
        return Err(MoneqError::Malformed(format!(
            "q must lie in [-1, 1] without 0, got {q}"
        )));
    }
    let a = q.abs().sqrt();
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(a, 0.0),
            C64::new(-q.signum() / a, 0.0),
            C64::new(0.0, 0.0),
        ],
    ))
}

/// Same sign of `F F̄` and equal `Tr(F*F)`.
pub fn decide_moneq_ao(a: &AoFMatrix, b: &AoFMatrix) -> bool {
    a.sign == b.sign && (a.t - b.t).abs() <= T_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> CMatrix {
        CMatrix::from_fn(rows.len(), rows[0].len(), |i, j| C64::new(rows[i][j], 0.0))
    }

    fn three_by_three() -> CMatrix {
        let s = 2f64.sqrt();
        real(&[&[0.0, 0.0, s], &[0.0, 1.0, 0.0], &[1.0 / s, 0.0, 0.0]])
    }

    #[test]
    fn fq_minus_half() {
        let a = validate_aof(&fq_matrix(-0.5).unwrap()).unwrap();
        assert_eq!(a.sign(), 1);
        assert!((a.t() - 2.5).abs() < 1e-15);
        let inv = iso_invariant(&a);
        assert_eq!(inv.n, 2);
        assert!((inv.eigenvalues[0] - 0.5).abs() < 1e-14 && (inv.eigenvalues[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn fq_sign_rule() {
        for &q in &[-1.0, -0.7, -0.2, 0.2, 0.7, 1.0] {
            let a = validate_aof(&fq_matrix(q).unwrap()).unwrap();
            assert_eq!(f64::from(a.sign()), -q.signum(), "q={q}");
            assert!((a.t() - (q + 1.0 / q).abs()).abs() < 1e-12);
            assert!((su2_partner(&a) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_is_kac() {
        let a = validate_aof(&CMatrix::identity(2, 2)).unwrap();
        assert_eq!(a.sign(), 1);
        assert_eq!(a.t(), 2.0);
        assert_eq!(iso_invariant(&a).eigenvalues, vec![1.0, 1.0]);
        assert_eq!(su2_partner(&a), -1.0);
    }

    #[test]
    fn scalar_f_is_rejected() {
        assert!(matches!(
            validate_aof(&CMatrix::identity(1, 1)),
            Err(MoneqError::AoTooSmall { n: 1 })
        ));
    }

    #[test]
    fn three_dimensional_example() {
        let a = validate_aof(&three_by_three()).unwrap();
        assert_eq!(a.sign(), 1);
        assert!((a.t() - 3.5).abs() < 1e-14);
        let e = iso_invariant(&a).eigenvalues;
        for (got, want) in e.iter().zip([0.5, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let q = su2_partner(&a);
        assert!((q - -(3.5 - 8.25f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((q - -0.313859).abs() < 1e-6);
        let partner = validate_aof(&fq_matrix(q).unwrap()).unwrap();
        assert!(decide_moneq_ao(&a, &partner));
        assert!(!iso_invariant(&a).isomorphic(&iso_invariant(&partner)));
    }

    #[test]
    fn opposite_signs_are_inequivalent() {
        let a = validate_aof(&fq_matrix(-0.5).unwrap()).unwrap();
        let b = validate_aof(&fq_matrix(0.5).unwrap()).unwrap();
        assert!(!decide_moneq_ao(&a, &b));
        assert!(decide_moneq_ao(&a, &a));
    }

    #[test]
    fn complex_unitary_conjugates_stay_in_class() {
        // F ↦ v F v^t keeps the isomorphism class
        let f = three_by_three();
        let (c, s) = (0.6f64, 0.8f64);
        let v = CMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(c, 0.0),
                C64::new(0.0, s),
                C64::new(0.0, 0.0),
                C64::new(0.0, s),
                C64::new(c, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 1.0),
            ],
        );
        let g = &v * &f * v.transpose();
        let a = validate_aof(&f).unwrap();
        let b = validate_aof(&g).unwrap();
        assert!(iso_invariant(&a).isomorphic(&iso_invariant(&b)));
    }

    #[test]
    fn rejections() {
        assert!(matches!(
            validate_aof(&real(&[&[1.0, 2.0]])),
            Err(MoneqError::NotSquare { .. })
        ));
        assert!(matches!(
            validate_aof(&real(&[&[1.0, 0.0], &[0.0, 0.0]])),
            Err(MoneqError::Singular)
        ));
        assert!(matches!(
            validate_aof(&real(&[&[2.0, 0.0], &[0.0, 0.5]])),
            Err(MoneqError::NotPlusMinusOne { .. })
        ));
        assert!(fq_matrix(0.0).is_err());
        assert!(fq_matrix(1.5).is_err());
    }
}
