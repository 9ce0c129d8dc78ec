use serde::{Deserialize, Serialize};

use super::{CMatrix, MatrixJson, MoneqError, C64};

/// Tolerance for `μμ* = δ²·1`, relative to `max(1, δ²)`.
pub const DELTA_FORM_TOL: f64 = 1e-9;
const STATE_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;

/// One matrix block `M_n(ℂ)` of `D`, with the density `F` of the state on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub n: usize,
    pub f: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct BlockJson {
    n: usize,
    #[serde(rename = "F")]
    f: MatrixJson,
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    blocks: Vec<BlockJson>,
}

/// A finite-dimensional C*-algebra `D = ⊕ M_{n_i}(ℂ)` with the faithful state
/// `ω(a) = Σ_i Tr(F_i a_i)`.
///
/// JSON form: `{"blocks":[{"n":2,"F":{"re":[[…]],"im":[[…]]}}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct AlgebraSpec {
    blocks: Vec<Block>,
}

impl AlgebraSpec {
    pub fn new(blocks: Vec<Block>) -> Result<Self, MoneqError> {
        if blocks.is_empty() {
            return Err(MoneqError::Malformed("no blocks".into()));
        }
        let mut total = 0.0;
        for b in &blocks {
            if b.f.shape() != (b.n, b.n) || b.n == 0 {
                return Err(MoneqError::Malformed(format!(
                    "block of size {} has F of shape {:?}",
                    b.n,
                    b.f.shape()
                )));
            }
            check_positive(&b.f)?;
            total += b.f.trace().re;
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(MoneqError::StateNotNormalized { total });
        }
        Ok(Self { blocks })
    }

    /// `ℂ^k` with the state given by the weights.
    pub fn commutative(weights: &[f64]) -> Result<Self, MoneqError> {
        Self::new(
            weights
                .iter()
                .map(|&w| Block {
                    n: 1,
                    f: CMatrix::from_element(1, 1, C64::new(w, 0.0)),
                })
                .collect(),
        )
    }

    /// `M_n(ℂ)` with the state `Tr(F ·)`.
    pub fn matrix(f: CMatrix) -> Result<Self, MoneqError> {
        let n = f.nrows();
        Self::new(vec![Block { n, f }])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// `dim D = Σ n_i²`.
    pub fn total_dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.n * b.n).sum()
    }

    /// Whether `ω` is the Plancherel trace (`F_i = (n_i/dim D)·1`),
    /// the Kac case.
    pub fn is_trace_state(&self) -> bool {
        let dim = self.total_dimension() as f64;
        self.blocks.iter().all(|b| {
            let target = CMatrix::identity(b.n, b.n) * C64::new(b.n as f64 / dim, 0.0);
            (&b.f - target).iter().all(|z| z.norm() <= 1e-12)
        })
    }
}

impl TryFrom<SpecJson> for AlgebraSpec {
    type Error = MoneqError;

    fn try_from(s: SpecJson) -> Result<Self, Self::Error> {
        let blocks = s
            .blocks
            .into_iter()
            .map(|b| {
                Ok(Block {
                    n: b.n,
                    f: b.f.to_matrix()?,
                })
            })
            .collect::<Result<Vec<_>, MoneqError>>()?;
        Self::new(blocks)
    }
}

impl From<AlgebraSpec> for SpecJson {
    fn from(s: AlgebraSpec) -> Self {
        SpecJson {
            blocks: s
                .blocks
                .iter()
                .map(|b| BlockJson {
                    n: b.n,
                    f: MatrixJson::from_matrix(&b.f),
                })
                .collect(),
        }
    }
}

pub(crate) fn check_positive(f: &CMatrix) -> Result<(), MoneqError> {
    let (r, c) = f.shape();
    if r != c {
        return Err(MoneqError::NotSquare { rows: r, cols: c });
    }
    if (f - f.adjoint()).iter().any(|z| z.norm() > HERMITIAN_TOL) {
        return Err(MoneqError::NotHermitian);
    }
    let min = f
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(min > STATE_TOL) {
        return Err(MoneqError::NotPositive { min_eigenvalue: min });
    }
    Ok(())
}

/// Hermitian square root of the inverse of a positive matrix.
fn inv_sqrt(f: &CMatrix) -> CMatrix {
    let eig = f.clone().symmetric_eigen();
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Structure constants of `μ: D ⊗ D → D` and `η: ℂ → D` in the orthonormal
/// basis `e_{jk} F_i^{−1/2}` of the GNS inner product `⟨a, b⟩ = ω(a* b)`.
#[derive(Clone, Debug)]
pub struct MultiplicationTensor {
    /// `(block, j, k)` of each basis vector `e_{jk} F_block^{−1/2}`.
    pub basis: Vec<(usize, usize, usize)>,
    /// `mu[γ][α·N + β] = ⟨b_γ, b_α b_β⟩`.
    pub mu: CMatrix,
    /// `eta[γ] = ⟨b_γ, 1⟩`.
    pub eta: Vec<C64>,
}

impl MultiplicationTensor {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

pub fn multiplication_tensor(d: &AlgebraSpec) -> MultiplicationTensor {
    let roots: Vec<CMatrix> = d.blocks.iter().map(|b| inv_sqrt(&b.f)).collect();
    let mut basis = Vec::new();
    let mut elements: Vec<(usize, CMatrix)> = Vec::new();
    for (i, b) in d.blocks.iter().enumerate() {
        for j in 0..b.n {
            for k in 0..b.n {
                let mut e = CMatrix::zeros(b.n, b.n);
                e[(j, k)] = C64::new(1.0, 0.0);
                basis.push((i, j, k));
                elements.push((i, e * &roots[i]));
            }
        }
    }
    let n = elements.len();
    // ⟨a, b⟩ = Tr(F a* b) on the common block
    let inner = |g: &(usize, CMatrix), block: usize, m: &CMatrix| -> C64 {
        if g.0 != block {
            return C64::new(0.0, 0.0);
        }
        (&d.blocks[block].f * g.1.adjoint() * m).trace()
    };
    let mut mu = CMatrix::zeros(n, n * n);
    for (a, ea) in elements.iter().enumerate() {
        for (b, eb) in elements.iter().enumerate() {
            if ea.0 != eb.0 {
                continue;
            }
            let prod = &ea.1 * &eb.1;
            for (g, eg) in elements.iter().enumerate() {
                mu[(g, a * n + b)] = inner(eg, ea.0, &prod);
            }
        }
    }
    let eta = elements
        .iter()
        .map(|eg| {
            let one = CMatrix::identity(d.blocks[eg.0].n, d.blocks[eg.0].n);
            inner(eg, eg.0, &one)
        })
        .collect();
    MultiplicationTensor { basis, mu, eta }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaForm {
    pub is_delta_form: bool,
    pub delta2: f64,
    /// `max |(μμ* − δ²·1)_{ij}|`.
    pub defect: f64,
}

/// Computes `μμ*` in the orthonormal GNS basis and tests whether it is a
/// scalar; `delta2` is the best scalar fit `Tr(μμ*)/dim D`.
pub fn delta_form(d: &AlgebraSpec) -> Result<DeltaForm, MoneqError> {
    let t = multiplication_tensor(d);
    let mm = &t.mu * t.mu.adjoint();
    let n = t.dim();
    let delta2 = mm.trace().re / n as f64;
    let defect = (&mm - CMatrix::identity(n, n) * C64::new(delta2, 0.0))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(DeltaForm {
        is_delta_form: defect <= DELTA_FORM_TOL * delta2.max(1.0),
        delta2,
        defect,
    })
}

fn require_delta_form(d: &AlgebraSpec) -> Result<DeltaForm, MoneqError> {
    let df = delta_form(d)?;
    if !df.is_delta_form {
        return Err(MoneqError::NotDeltaForm { defect: df.defect });
    }
    Ok(df)
}

/// Both δ-forms on algebras of dimension `≥ 4`, with equal `δ²`.
pub fn decide_moneq_aut(d1: &AlgebraSpec, d2: &AlgebraSpec) -> Result<bool, MoneqError> {
    for d in [d1, d2] {
        let dim = d.total_dimension();
        if dim < 4 {
            return Err(MoneqError::DimensionTooSmall { dim });
        }
    }
    let a = require_delta_form(d1)?;
    let b = require_delta_form(d2)?;
    Ok((a.delta2 - b.delta2).abs() <= DELTA_FORM_TOL)
}

/// `M_2(ℂ)` with `F = diag(λ, 1−λ)`, `λ = (1 − √(1 − 4/δ²))/2`, so that
/// `Tr(F) = 1` and `Tr(F⁻¹) = δ²`.
pub fn aut_normal_form(d: &AlgebraSpec) -> Result<AlgebraSpec, MoneqError> {
    let df = require_delta_form(d)?;
    normal_form_for(df.delta2)
}

pub(crate) fn normal_form_for(delta2: f64) -> Result<AlgebraSpec, MoneqError> {
    if !(delta2 >= 4.0 - DELTA_FORM_TOL) {
        return Err(MoneqError::NoNormalForm { delta2 });
    }
    let disc = (1.0 - 4.0 / delta2).max(0.0).sqrt();
    let lambda = (1.0 - disc) / 2.0;
    let f = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(lambda, 0.0),
        C64::new(1.0 - lambda, 0.0),
    ]));
    AlgebraSpec::matrix(f)
}
