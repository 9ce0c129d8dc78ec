use std::collections::BTreeMap;

use serde::Serialize;

use super::{CliError, SelftestArgs};
use crate::fusion::{FiniteGroup, FusionRing, Label, ProbMeasure};
use crate::moneq::{
    aut_normal_form, decide_moneq_aut, delta_form, fq_matrix, su2_partner, validate_aof,
    walk_of, AlgebraSpec, CMatrix, QuantumGroupInput, C64,
};
use crate::potential::oracle::windowed_green;
use crate::potential::{
    green_row, martin_paper, poisson_triviality_test, GreenOptions, Triviality,
};
use crate::walk::CentralWalk;

/// The `ring` command checks the axioms on at most this many labels.
pub(super) const AXIOM_CHECK_LABELS: usize = 12;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

fn add(
    acc: &mut BTreeMap<Label, u32>,
    m: u32,
    parts: BTreeMap<Label, u32>,
) {
    for (z, k) in parts {
        *acc.entry(z).or_default() += m * k;
    }
}

/// Unit, involution, Frobenius reciprocity, associativity and
/// multiplicativity of `dim_q` on `labels`.
pub fn fusion_checks(ring: &FusionRing, labels: &[Label]) -> Result<Vec<Check>, CliError> {
    let eps = ring.epsilon();
    let (mut unit, mut inv, mut frob, mut assoc) = (0usize, 0usize, 0usize, 0usize);
    let mut dim_err = 0.0f64;
    for x in labels {
        let single = BTreeMap::from([(x.clone(), 1)]);
        if ring.tensor_decompose(x, &eps)? != single || ring.tensor_decompose(&eps, x)? != single {
            unit += 1;
        }
        let xbar = ring.conjugate(x)?;
        if ring.conjugate(&xbar)? != *x {
            inv += 1;
        }
        let dx = ring.quantum_dimension(x)?;
        for y in labels {
            let ybar = ring.conjugate(y)?;
            let xy = ring.tensor_decompose(x, y)?;
            if ring.mult(&eps, x, y)? != u32::from(*y == xbar) {
                inv += 1;
            }
            let mut sum = 0.0;
            for (z, m) in &xy {
                sum += f64::from(*m) * ring.quantum_dimension(z)?;
            }
            let prod = dx * ring.quantum_dimension(y)?;
            dim_err = dim_err.max((sum - prod).abs() / prod);
            for z in labels {
                let m = xy.get(z).copied().unwrap_or(0);
                if m != ring.mult(x, z, &ybar)? || m != ring.mult(y, &xbar, z)? {
                    frob += 1;
                }
                let mut left = BTreeMap::new();
                for (w, k) in &xy {
                    add(&mut left, *k, ring.tensor_decompose(w, z)?);
                }
                let mut right = BTreeMap::new();
                for (u, k) in ring.tensor_decompose(y, z)? {
                    add(&mut right, k, ring.tensor_decompose(x, &u)?);
                }
                if left != right {
                    assoc += 1;
                }
            }
        }
    }
    let exact = |name: &str, bad: usize| Check::new(name, bad == 0, format!("{bad} violations"));
    Ok(vec![
        exact("unit", unit),
        exact("involution", inv),
        exact("frobenius_reciprocity", frob),
        exact("associativity", assoc),
        Check::new(
            "dim_multiplicativity",
            dim_err <= 1e-9,
            format!("max relative error {dim_err:e}"),
        ),
    ])
}

fn idx(n: u32) -> Label {
    Label::Index(n)
}

fn measure(pairs: &[(u32, f64)]) -> ProbMeasure {
    ProbMeasure::new(pairs.iter().map(|&(l, w)| (idx(l), w))).expect("valid measure")
}

fn stochastic(walk: &CentralWalk, labels: &[Label]) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for x in labels {
        let s: f64 = walk.transition_row(x)?.values().sum();
        worst = worst.max((s - 1.0).abs());
    }
    Ok(worst)
}

fn detailed_balance(walk: &CentralWalk, labels: &[Label]) -> Result<f64, CliError> {
    let rev = walk.reversed()?;
    let ring = walk.ring();
    let mut worst = 0.0f64;
    for x in labels {
        let dx = ring.quantum_dimension(x)?;
        for y in labels {
            let dy = ring.quantum_dimension(y)?;
            let a = dx * dx * walk.transition_prob(x, y)?;
            let b = dy * dy * rev.transition_prob(y, x)?;
            if a.max(b) > 0.0 {
                worst = worst.max((a - b).abs() / a.max(b));
            }
        }
    }
    Ok(worst)
}

fn suite() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let s3 = FusionRing::group_dual(FiniteGroup::symmetric3());

    for ring in [
        FusionRing::su2(2.5)?,
        FusionRing::so3(5.0)?,
        s3.clone(),
        FusionRing::product(FusionRing::su2(3.0)?, FusionRing::group_dual(FiniteGroup::cyclic(2)?)),
    ] {
        let labels = ring.labels_up_to(4);
        for c in fusion_checks(&ring, &labels)? {
            out.push(Check::new(format!("fusion {} {}", ring.kind_name(), c.name), c.passed, c.detail));
        }
    }

    let mu = measure(&[(1, 0.2), (2, 0.3), (3, 0.5)]);
    let labels: Vec<Label> = (0..=30).map(idx).collect();
    for ring in [FusionRing::su2(2.5)?, FusionRing::so3(5.0)?] {
        let walk = CentralWalk::new(ring, mu.clone())?;
        let e = stochastic(&walk, &labels)?;
        out.push(Check::new(format!("rows sum to one ({})", walk.ring().kind_name()), e <= 1e-12, format!("{e:e}")));
        let e = detailed_balance(&walk, &labels)?;
        out.push(Check::new(format!("detailed balance ({})", walk.ring().kind_name()), e <= 1e-10, format!("{e:e}")));
    }
    // 3-cycles are not self-inverse, so μ ≠ μ̄ here
    let walk = CentralWalk::new(s3.clone(), measure(&[(1, 0.7), (3, 0.3)]))?;
    let all = s3.all_labels().expect("finite");
    let e = detailed_balance(&walk, &all)?;
    out.push(Check::new("detailed balance (group_dual, μ ≠ μ̄)", e <= 1e-10, format!("{e:e}")));

    let walk = CentralWalk::new(FusionRing::su2(2.5)?, measure(&[(1, 1.0)]))?;
    let opts = GreenOptions::default();
    let ys: Vec<Label> = (0..=5).map(idx).collect();
    let xs: Vec<Label> = (0..=6).map(idx).collect();
    let mut g = BTreeMap::new();
    for x in &xs {
        for e in green_row(&walk, x, &ys, &opts)? {
            g.insert((e.x, e.y), e.value);
        }
    }
    let mut worst = 0.0f64;
    for x in &xs[..6] {
        let row = walk.transition_row(x)?;
        for y in &ys {
            let rhs = f64::from(u8::from(x == y))
                + row.iter().map(|(z, p)| p * g[&(z.clone(), y.clone())]).sum::<f64>();
            let lhs = g[&(x.clone(), y.clone())];
            worst = worst.max((lhs - rhs).abs() / lhs);
        }
    }
    out.push(Check::new("Green identity G = I + PG", worst <= 5.0 * opts.tol, format!("relative {worst:e}")));

    let window: Vec<Label> = (0..=200).map(idx).collect();
    let w = windowed_green(&walk, &window)?;
    let mut worst = 0.0f64;
    for x in &xs[..6] {
        for y in &ys {
            worst = worst.max((g[&(x.clone(), y.clone())] - w[(x.index().unwrap() as usize, y.index().unwrap() as usize)]).abs());
        }
    }
    out.push(Check::new("Green series vs linear solve", worst <= 1e-6, format!("{worst:e}")));

    let k: f64 = (0..=5)
        .map(|x| martin_paper(&walk, &idx(x), &idx(0), &opts).map(|v| (v - 1.0).abs()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(Check::new("martin_paper(x, ε) = 1", k == 0.0, format!("{k:e}")));

    let s = 2f64.sqrt();
    let f3 = CMatrix::from_row_slice(
        3,
        3,
        &[0.0, 0.0, s, 0.0, 1.0, 0.0, 1.0 / s, 0.0, 0.0].map(|v| C64::new(v, 0.0)),
    );
    let a = validate_aof(&f3)?;
    let partner = validate_aof(&fq_matrix(su2_partner(&a))?)?;
    let mu = measure(&[(1, 0.5), (2, 0.25), (3, 0.25)]);
    let labels: Vec<Label> = (0..=40).map(idx).collect();
    let p1 = walk_of(&QuantumGroupInput::Ao(a), &mu)?.transition_matrix(&labels)?;
    let p2 = walk_of(&QuantumGroupInput::Ao(partner), &mu)?.transition_matrix(&labels)?;
    let diff = p1
        .iter()
        .flatten()
        .zip(p2.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    out.push(Check::new("A_o(F) and SU_q(2) walks agree", diff <= 1e-12, format!("{diff:e}")));

    let f = CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.3, 0.0), C64::new(0.05, 0.1), C64::new(0.05, -0.1), C64::new(0.7, 0.0)],
    );
    let trinv = f.clone().try_inverse().expect("invertible").trace().re;
    let df = delta_form(&AlgebraSpec::matrix(f)?)?;
    let e = (df.delta2 - trinv).abs();
    out.push(Check::new("δ² = Tr(F⁻¹) on M_2", df.is_delta_form && e <= 1e-9, format!("{e:e}")));

    let c5 = AlgebraSpec::commutative(&[0.2; 5])?;
    let nf = aut_normal_form(&c5)?;
    out.push(Check::new(
        "A_aut normal form round trip",
        decide_moneq_aut(&c5, &nf)?,
        format!("δ² = {}", delta_form(&nf)?.delta2),
    ));

    let z3 = FusionRing::group_dual(FiniteGroup::cyclic(3)?);
    let walk = CentralWalk::new(z3.clone(), ProbMeasure::uniform(&z3.all_labels().unwrap())?)?;
    let b = poisson_triviality_test(&walk, 0, 64)?;
    out.push(Check::new(
        "Z/3 uniform has trivial boundary",
        b.verdict == Some(Triviality::Trivial),
        format!("{:?}", b.verdict),
    ));
    Ok(out)
}

pub(super) fn run(a: &SelftestArgs) -> Result<(), CliError> {
    let checks = suite()?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if a.json {
        let v = serde_json::json!({ "kind": "selftest", "checks": checks, "failed": failed });
        println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
    } else {
        let width = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
        for c in &checks {
            let pad = width - c.name.chars().count();
            println!(
                "{}  {}{}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                " ".repeat(pad),
                c.detail
            );
        }
        println!("{} passed, {failed} failed", checks.len() - failed);
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{failed} self-checks failed")))
    }
}
