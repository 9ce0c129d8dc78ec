use std::collections::BTreeMap;

use fusionwalk::fusion::{convolution_power, convolve, FiniteGroup};
use fusionwalk::moneq::{
    decide_moneq_ao, fq_matrix, su2_partner, validate_aof, walk_of, CMatrix, QuantumGroupInput,
    C64,
};
use fusionwalk::{CentralWalk, FusionRing, Label, ProbMeasure};
use proptest::prelude::*;

fn l(n: u32) -> Label {
    Label::Index(n)
}

fn ring_strategy() -> impl Strategy<Value = FusionRing> {
    prop_oneof![
        (2.0f64..6.0).prop_map(|t| FusionRing::su2(t).unwrap()),
        (4.0f64..9.0).prop_map(|d| FusionRing::so3(d).unwrap()),
        Just(FusionRing::group_dual(FiniteGroup::symmetric3())),
        (2usize..7).prop_map(|n| FusionRing::group_dual(FiniteGroup::cyclic(n).unwrap())),
    ]
}

fn label_in(ring: &FusionRing, n: u32) -> Label {
    match ring.all_labels() {
        Some(all) => all[n as usize % all.len()].clone(),
        None => l(n),
    }
}

fn measure_on(ring: &FusionRing, raw: &[(u32, f64)]) -> ProbMeasure {
    let mut w: BTreeMap<Label, f64> = BTreeMap::new();
    for &(n, x) in raw {
        *w.entry(label_in(ring, n)).or_default() += x;
    }
    let total: f64 = w.values().sum();
    ProbMeasure::new(w.into_iter().map(|(k, v)| (k, v / total))).unwrap()
}

fn weights() -> impl Strategy<Value = Vec<(u32, f64)>> {
    prop::collection::vec((0u32..5, 0.05f64..1.0), 1..4)
}

fn close(a: &BTreeMap<Label, f64>, b: &BTreeMap<Label, f64>, tol: f64) -> bool {
    a.keys()
        .chain(b.keys())
        .all(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fusion_is_associative_and_frobenius(ring in ring_strategy(), a in 0u32..20, b in 0u32..20, c in 0u32..20) {
        let (x, y, z) = (label_in(&ring, a), label_in(&ring, b), label_in(&ring, c));
        let mut left: BTreeMap<Label, u32> = BTreeMap::new();
        for (w, k) in ring.tensor_decompose(&x, &y).unwrap() {
            for (v, m) in ring.tensor_decompose(&w, &z).unwrap() {
                *left.entry(v).or_default() += k * m;
            }
        }
        let mut right: BTreeMap<Label, u32> = BTreeMap::new();
        for (u, k) in ring.tensor_decompose(&y, &z).unwrap() {
            for (v, m) in ring.tensor_decompose(&x, &u).unwrap() {
                *right.entry(v).or_default() += k * m;
            }
        }
        prop_assert_eq!(left, right);
        let ybar = ring.conjugate(&y).unwrap();
        prop_assert_eq!(ring.mult(&z, &x, &y).unwrap(), ring.mult(&x, &z, &ybar).unwrap());
        let dims: f64 = ring.tensor_decompose(&x, &y).unwrap().iter()
            .map(|(w, m)| f64::from(*m) * ring.quantum_dimension(w).unwrap()).sum();
        let prod = ring.quantum_dimension(&x).unwrap() * ring.quantum_dimension(&y).unwrap();
        prop_assert!((dims - prod).abs() <= 1e-9 * prod);
    }

    #[test]
    fn rows_are_stochastic(ring in ring_strategy(), raw in weights(), a in 0u32..80) {
        let walk = CentralWalk::new(ring.clone(), measure_on(&ring, &raw)).unwrap();
        let s: f64 = walk.transition_row(&label_in(&ring, a)).unwrap().values().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12, "row sum {}", s);
    }

    #[test]
    fn detailed_balance_with_reversed_walk(ring in ring_strategy(), raw in weights(), a in 0u32..30, b in 0u32..30) {
        let walk = CentralWalk::new(ring.clone(), measure_on(&ring, &raw)).unwrap();
        let rev = walk.reversed().unwrap();
        let (x, y) = (label_in(&ring, a), label_in(&ring, b));
        let dx = ring.quantum_dimension(&x).unwrap();
        let dy = ring.quantum_dimension(&y).unwrap();
        let lhs = dx * dx * walk.transition_prob(&x, &y).unwrap();
        let rhs = dy * dy * rev.transition_prob(&y, &x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(rhs).max(1e-300));
    }

    #[test]
    fn n_step_composes(ring in ring_strategy(), raw in weights(), a in 0u32..10, m in 0usize..5, n in 0usize..5) {
        let walk = CentralWalk::new(ring.clone(), measure_on(&ring, &raw)).unwrap();
        let x = label_in(&ring, a);
        let direct = walk.n_step(&x, m + n).unwrap();
        let mut composed: BTreeMap<Label, f64> = BTreeMap::new();
        for (z, p) in walk.n_step(&x, m).unwrap() {
            for (y, q) in walk.n_step(&z, n).unwrap() {
                *composed.entry(y).or_default() += p * q;
            }
        }
        prop_assert!(close(&direct, &composed, 1e-12));
    }

    #[test]
    fn convolution_is_associative_and_drives_the_walk(ring in ring_strategy(), r1 in weights(), r2 in weights(), r3 in weights(), n in 0usize..5) {
        let (a, b, c) = (measure_on(&ring, &r1), measure_on(&ring, &r2), measure_on(&ring, &r3));
        let ab_c = convolve(&ring, &convolve(&ring, &a, &b).unwrap(), &c).unwrap();
        let a_bc = convolve(&ring, &a, &convolve(&ring, &b, &c).unwrap()).unwrap();
        let as_map = |m: &ProbMeasure| m.iter().map(|(k, v)| (k.clone(), v)).collect::<BTreeMap<_, _>>();
        prop_assert!(close(&as_map(&ab_c), &as_map(&a_bc), 1e-12));
        // P^n(ε, ·) = μ^{*n}
        let walk = CentralWalk::new(ring.clone(), a.clone()).unwrap();
        let pn = walk.n_step(&ring.epsilon(), n).unwrap();
        prop_assert!(close(&pn, &as_map(&convolution_power(&ring, &a, n).unwrap()), 1e-12));
    }
}

/// `F = [[0, a], [s/ā, 0]]` has `F F̄ = s·1`.
fn f2(a: C64, sign: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), a, C64::new(sign, 0.0) / a.conj(), C64::new(0.0, 0.0)])
}

/// `F = [[0, 0, a], [0, 1, 0], [1/ā, 0, 0]]`, sign +1.
fn f3(a: C64) -> CMatrix {
    let z = C64::new(0.0, 0.0);
    CMatrix::from_row_slice(3, 3, &[z, z, a, z, C64::new(1.0, 0.0), z, C64::new(1.0, 0.0) / a.conj(), z, z])
}

fn complex() -> impl Strategy<Value = C64> {
    (0.2f64..4.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, th)| C64::from_polar(r, th))
}

fn aof_strategy() -> impl Strategy<Value = CMatrix> {
    prop_oneof![
        (complex(), prop::bool::ANY).prop_map(|(a, s)| f2(a, if s { 1.0 } else { -1.0 })),
        complex().prop_map(f3),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ao_walk_matches_su2_partner(f in aof_strategy(), raw in prop::collection::vec((1u32..4, 0.05f64..1.0), 1..3)) {
        let a = validate_aof(&f).unwrap();
        let partner = validate_aof(&fq_matrix(su2_partner(&a)).unwrap()).unwrap();
        let total: f64 = raw.iter().map(|r| r.1).sum();
        let mu = ProbMeasure::new(raw.iter().map(|&(n, w)| (l(n), w / total))).unwrap();
        let labels: Vec<Label> = (0..=15).map(l).collect();
        let p1 = walk_of(&QuantumGroupInput::Ao(a), &mu).unwrap().transition_matrix(&labels).unwrap();
        let p2 = walk_of(&QuantumGroupInput::Ao(partner), &mu).unwrap().transition_matrix(&labels).unwrap();
        for (r1, r2) in p1.iter().zip(&p2) {
            for (x, y) in r1.iter().zip(r2) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn ao_equivalence_is_an_equivalence(f in aof_strategy(), g in aof_strategy(), h in aof_strategy()) {
        let (a, b, c) = (validate_aof(&f).unwrap(), validate_aof(&g).unwrap(), validate_aof(&h).unwrap());
        prop_assert!(decide_moneq_ao(&a, &a));
        prop_assert_eq!(decide_moneq_ao(&a, &b), decide_moneq_ao(&b, &a));
        if decide_moneq_ao(&a, &b) && decide_moneq_ao(&b, &c) {
            prop_assert!(decide_moneq_ao(&a, &c));
        }
        // every F is equivalent to its SU_q(2) partner
        let p = validate_aof(&fq_matrix(su2_partner(&a)).unwrap()).unwrap();
        prop_assert!(decide_moneq_ao(&a, &p));
    }
}
