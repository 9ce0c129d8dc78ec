//! The central random walk on `Irred(G)`.
//!
//! A probability measure μ on labels induces a Markov chain whose transition
//! probabilities are the restriction of the Markov operator `P_μ` to the
//! central projections `p_x`:
//!
//! ```text
//! p(x, y) = Σ_z μ(z) · mult(y, x ⊗ z) · dim_q(y) / (dim_q(x) · dim_q(z))
//! ```
//!
//! This follows from `p_x p(x,y) = p_x P_μ(p_y)` once `ψ_z` is written as
//! `Tr(Q_z ·)/Tr(Q_z)`: applying `ψ_z` to the slice of `Δ̂(p_y)` on
//! `H_x ⊗ H_z` gives the trace of the projection onto the `y`-isotypic part,
//! `mult(y, x⊗z)·dim_q(y)`, divided by `dim_q(x)·dim_q(z)`. Rows sum to one
//! because quantum dimensions are multiplicative, and the chain satisfies
//! `dim_q(x)² p_μ(x,y) = dim_q(y)² p_μ̄(y,x)` by Frobenius reciprocity. Both
//! identities are checked in the test suite.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::fusion::{reverse_measure, FusionError, FusionRing, Label, ProbMeasure};

/// Largest number of states an exact n-step computation may allocate.
pub const STATE_BUDGET: usize = 20_000_000;

pub const DEFAULT_PERIOD_HORIZON: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error("resource limit: {0}")]
    Resource(String),
}

type Row = Arc<[(usize, f64)]>;

#[derive(Default)]
struct StateCache {
    labels: Vec<Label>,
    index: HashMap<Label, usize>,
    log_dims: Vec<f64>,
    rows: Vec<Option<Row>>,
}

/// The Markov chain on labels induced by `(ring, μ)`.
///
/// Labels are interned on first use and their transition rows cached. The
/// cache sits behind a lock, so a walk can be shared between threads.
pub struct CentralWalk {
    ring: FusionRing,
    mu: ProbMeasure,
    // (ln dim_q(z), μ(z)) for z in supp μ
    letters: Vec<(Label, f64, f64)>,
    cache: RwLock<StateCache>,
}

impl std::fmt::Debug for CentralWalk {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CentralWalk")
            .field("ring", &self.ring)
            .field("mu", &self.mu)
            .finish()
    }
}

impl Clone for CentralWalk {
    fn clone(&self) -> Self {
        Self::new(self.ring.clone(), self.mu.clone()).expect("validated on construction")
    }
}

impl CentralWalk {
    pub fn new(ring: FusionRing, mu: ProbMeasure) -> Result<Self, WalkError> {
        mu.check_ring(&ring)?;
        let letters = mu
            .iter()
            .map(|(z, w)| Ok((z.clone(), ring.log_quantum_dimension(z)?, w)))
            .collect::<Result<Vec<_>, FusionError>>()?;
        Ok(Self {
            ring,
            mu,
            letters,
            cache: RwLock::new(StateCache::default()),
        })
    }

    pub fn ring(&self) -> &FusionRing {
        &self.ring
    }

    pub fn measure(&self) -> &ProbMeasure {
        &self.mu
    }

    /// The walk driven by the reversed measure `μ̄`.
    pub fn reversed(&self) -> Result<CentralWalk, WalkError> {
        CentralWalk::new(self.ring.clone(), reverse_measure(&self.ring, &self.mu)?)
    }

    /// `p(x, y)`.
    pub fn transition_prob(&self, x: &Label, y: &Label) -> Result<f64, WalkError> {
        self.ring.check_label(y)?;
        let i = self.state_id(x)?;
        let row = self.row(i);
        let cache = self.cache.read().unwrap();
        Ok(match cache.index.get(y) {
            Some(&j) => row.iter().find(|(k, _)| *k == j).map_or(0.0, |(_, p)| *p),
            None => 0.0,
        })
    }

    /// All nonzero `p(x, ·)`.
    pub fn transition_row(&self, x: &Label) -> Result<BTreeMap<Label, f64>, WalkError> {
        let i = self.state_id(x)?;
        let row = self.row(i);
        let cache = self.cache.read().unwrap();
        Ok(row
            .iter()
            .map(|&(j, p)| (cache.labels[j].clone(), p))
            .collect())
    }

    /// The exact distribution of the walk after `n` steps from `x`.
    pub fn n_step(&self, x: &Label, n: usize) -> Result<BTreeMap<Label, f64>, WalkError> {
        let start = self.state_id(x)?;
        if let Some(bound) = self.support_bound(x, n) {
            if bound > STATE_BUDGET as u64 {
                return Err(WalkError::Resource(format!(
                    "{n} steps from {x} may reach {bound} states (budget {STATE_BUDGET})"
                )));
            }
        }
        let mut dist = Distribution::point(start);
        for _ in 0..n {
            dist = self.step(&dist, 0.0);
        }
        Ok(self.to_labels(&dist))
    }

    // For integer rings the index moves by at most max(supp μ) per step.
    fn support_bound(&self, x: &Label, n: usize) -> Option<u64> {
        let max_step = self
            .mu
            .support()
            .map(|z| self.ring.step_bound(z))
            .collect::<Option<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        let start = u64::from(x.index()?);
        Some(start + (n as u64).saturating_mul(u64::from(max_step)) + 1)
    }

    /// `gcd` of the return times to ε observed within the default horizon;
    /// `None` if the walk never returns within it.
    pub fn period(&self) -> Option<usize> {
        self.period_within(DEFAULT_PERIOD_HORIZON)
    }

    pub fn period_within(&self, horizon: usize) -> Option<usize> {
        let eps = self.state_id(&self.ring.epsilon()).expect("ε is a label");
        let mut reach: BTreeSet<usize> = BTreeSet::from([eps]);
        let mut g = 0usize;
        for n in 1..=horizon {
            let ids: Vec<usize> = reach.iter().copied().collect();
            let rows = self.rows(&ids);
            reach = rows
                .iter()
                .flat_map(|r| r.iter().map(|(j, _)| *j))
                .collect();
            if reach.contains(&eps) {
                g = gcd(g, n);
                if g == 1 {
                    break;
                }
            }
        }
        (g > 0).then_some(g)
    }

    /// Dense matrix `p(labels[i], labels[j])`, restricted to the given labels.
    pub fn transition_matrix(&self, labels: &[Label]) -> Result<Vec<Vec<f64>>, WalkError> {
        labels
            .iter()
            .map(|x| labels.iter().map(|y| self.transition_prob(x, y)).collect())
            .collect()
    }

    // ---- interned-state engine used by the potential module ----

    pub(crate) fn state_id(&self, x: &Label) -> Result<usize, WalkError> {
        self.ring.check_label(x)?;
        if let Some(&i) = self.cache.read().unwrap().index.get(x) {
            return Ok(i);
        }
        let mut cache = self.cache.write().unwrap();
        Ok(self.intern(&mut cache, x))
    }

    pub(crate) fn label_of(&self, id: usize) -> Label {
        self.cache.read().unwrap().labels[id].clone()
    }

    pub(crate) fn labels_of(&self, ids: &[usize]) -> Vec<Label> {
        let cache = self.cache.read().unwrap();
        ids.iter().map(|&i| cache.labels[i].clone()).collect()
    }


    fn intern(&self, cache: &mut StateCache, x: &Label) -> usize {
        if let Some(&i) = cache.index.get(x) {
            return i;
        }
        let ld = match x.index() {
            Some(n) if self.ring.is_integer_labeled() => {
                self.integer_log_dim(cache, n)
            }
            _ => self
                .ring
                .log_quantum_dimension(x)
                .expect("label checked before interning"),
        };
        let i = cache.labels.len();
        cache.labels.push(x.clone());
        cache.index.insert(x.clone(), i);
        cache.log_dims.push(ld);
        cache.rows.push(None);
        i
    }

    // ln d_n via the cached value of a neighbour when available
    fn integer_log_dim(&self, cache: &StateCache, n: u32) -> f64 {
        if n >= 2 {
            let prev = cache.index.get(&Label::Index(n - 1));
            let prev2 = cache.index.get(&Label::Index(n - 2));
            if let (Some(&a), Some(&b)) = (prev, prev2) {
                let (l1, l2) = (cache.log_dims[a], cache.log_dims[b]);
                let a_coef = self.recursion_coefficient();
                // d_n / d_{n−1} = a − d_{n−2}/d_{n−1}
                let r = a_coef - (l2 - l1).exp();
                return l1 + r.ln();
            }
        }
        self.ring
            .log_quantum_dimension(&Label::Index(n))
            .expect("integer label")
    }

    fn recursion_coefficient(&self) -> f64 {
        self.ring
            .su2_parameter()
            .or_else(|| self.ring.so3_parameter().map(|d2| d2 - 2.0))
            .expect("integer-labeled ring")
    }

    fn compute_row(&self, cache: &mut StateCache, i: usize) -> Row {
        let x = cache.labels[i].clone();
        let lx = cache.log_dims[i];
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        // ascending targets keep interning of integer labels in order
        let mut targets: Vec<(Label, u32, f64, f64)> = Vec::new();
        for (z, lz, w) in &self.letters {
            let dec = self
                .ring
                .tensor_decompose(&x, z)
                .expect("labels of this ring");
            for (y, m) in dec {
                targets.push((y, m, *lz, *w));
            }
        }
        targets.sort_by(|a, b| a.0.cmp(&b.0));
        for (y, m, lz, w) in targets {
            let j = self.intern(cache, &y);
            let ly = cache.log_dims[j];
            *acc.entry(j).or_insert(0.0) += w * f64::from(m) * (ly - lx - lz).exp();
        }
        acc.into_iter().collect::<Vec<_>>().into()
    }

    pub(crate) fn row(&self, i: usize) -> Row {
        self.rows(&[i]).pop().unwrap()
    }

    pub(crate) fn rows(&self, ids: &[usize]) -> Vec<Row> {
        {
            let cache = self.cache.read().unwrap();
            if ids.iter().all(|&i| cache.rows[i].is_some()) {
                return ids
                    .iter()
                    .map(|&i| cache.rows[i].clone().unwrap())
                    .collect();
            }
        }
        let mut cache = self.cache.write().unwrap();
        ids.iter()
            .map(|&i| {
                if let Some(r) = &cache.rows[i] {
                    return r.clone();
                }
                let r = self.compute_row(&mut cache, i);
                cache.rows[i] = Some(r.clone());
                r
            })
            .collect()
    }

    /// One step of the chain. Entries below `floor` are dropped; `floor = 0`
    /// keeps the evolution exact.
    pub(crate) fn step(&self, dist: &Distribution, floor: f64) -> Distribution {
        let ids: Vec<usize> = dist.entries.iter().map(|(i, _)| *i).collect();
        let rows = self.rows(&ids);
        let mut acc: HashMap<usize, f64> = HashMap::with_capacity(ids.len() + 8);
        for ((_, mass), row) in dist.entries.iter().zip(&rows) {
            for &(j, p) in row.iter() {
                *acc.entry(j).or_insert(0.0) += mass * p;
            }
        }
        let mut entries: Vec<(usize, f64)> =
            acc.into_iter().filter(|(_, m)| *m > floor).collect();
        entries.sort_unstable_by_key(|(i, _)| *i);
        Distribution { entries }
    }

    pub(crate) fn to_labels(&self, dist: &Distribution) -> BTreeMap<Label, f64> {
        let cache = self.cache.read().unwrap();
        dist.entries
            .iter()
            .map(|&(i, p)| (cache.labels[i].clone(), p))
            .collect()
    }
}

/// A sparse distribution over interned states.
#[derive(Clone, Debug, Default)]
pub(crate) struct Distribution {
    pub(crate) entries: Vec<(usize, f64)>,
}

impl Distribution {
    pub(crate) fn point(i: usize) -> Self {
        Self {
            entries: vec![(i, 1.0)],
        }
    }

    pub(crate) fn get(&self, i: usize) -> f64 {
        self.entries
            .binary_search_by_key(&i, |(k, _)| *k)
            .map_or(0.0, |pos| self.entries[pos].1)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Outcome of the generation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Generation {
    Generating,
    NotGeneratingWithinHorizon,
    ProvenNotGenerating,
}

/// Decides whether every label is charged by some `μ^{*n}`, `n ≥ 1`.
///
/// The set of charged labels is closed under fusion, so it is everything as
/// soon as it contains the ring's generators. It is provably proper when the
/// degrees of `supp μ` generate a proper part of the grading group, or when
/// the breadth-first closure stops growing before covering the ring.
pub fn is_generating(
    ring: &FusionRing,
    mu: &ProbMeasure,
    horizon: usize,
) -> Result<Generation, WalkError> {
    mu.check_ring(ring)?;
    let support: Vec<Label> = mu.support().cloned().collect();

    let grading = ring.grading_ring();
    let degrees: BTreeSet<Label> = support.iter().map(|z| ring.grade(z)).collect();
    let degree_closure = closure(&grading, &degrees, &degrees, usize::MAX)?.0;
    let all_degrees = grading.all_labels().expect("grading rings are finite");
    if degree_closure.len() < all_degrees.len() {
        return Ok(Generation::ProvenNotGenerating);
    }

    let generators = ring.generators();
    let seed: BTreeSet<Label> = support.iter().cloned().collect();
    let (reached, closed) = closure(ring, &seed, &seed, horizon.max(1) - 1)?;
    if generators.iter().all(|g| reached.contains(g)) {
        return Ok(Generation::Generating);
    }
    if closed {
        return Ok(match ring.all_labels() {
            Some(all) if all.iter().all(|x| reached.contains(x)) => Generation::Generating,
            _ => Generation::ProvenNotGenerating,
        });
    }
    Ok(Generation::NotGeneratingWithinHorizon)
}

// Labels reachable from `seed` by at most `rounds` right multiplications by
// `letters`; the flag reports whether the set stopped growing.
fn closure(
    ring: &FusionRing,
    seed: &BTreeSet<Label>,
    letters: &BTreeSet<Label>,
    rounds: usize,
) -> Result<(BTreeSet<Label>, bool), FusionError> {
    let mut reached = seed.clone();
    let mut frontier: Vec<Label> = seed.iter().cloned().collect();
    let mut round = 0;
    while !frontier.is_empty() {
        if round == rounds {
            return Ok((reached, false));
        }
        round += 1;
        let mut next = Vec::new();
        for y in &frontier {
            for w in letters {
                for z in ring.tensor_decompose(y, w)?.into_keys() {
                    if reached.insert(z.clone()) {
                        next.push(z);
                    }
                }
            }
        }
        frontier = next;
    }
    Ok((reached, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::FiniteGroup;

    fn l(n: u32) -> Label {
        Label::Index(n)
    }

    fn su2_walk(t: f64, mu: &str) -> CentralWalk {
        CentralWalk::new(
            FusionRing::su2(t).unwrap(),
            ProbMeasure::parse_compact(mu).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn su2_fundamental_rows() {
        let w = su2_walk(2.5, "1:1");
        assert!((w.transition_prob(&l(0), &l(1)).unwrap() - 1.0).abs() < 1e-15);
        assert!((w.transition_prob(&l(1), &l(2)).unwrap() - 0.84).abs() < 1e-14);
        assert!((w.transition_prob(&l(1), &l(0)).unwrap() - 0.16).abs() < 1e-14);
        assert_eq!(w.transition_prob(&l(1), &l(1)).unwrap(), 0.0);
        let row = w.transition_row(&l(1)).unwrap();
        assert_eq!(row.len(), 2);
    }

    #[test]
    fn so3_fundamental_row() {
        let w = CentralWalk::new(FusionRing::so3(4.0).unwrap(), ProbMeasure::point(l(1))).unwrap();
        let row = w.transition_row(&l(1)).unwrap();
        for (y, expected) in [(0, 1.0 / 9.0), (1, 3.0 / 9.0), (2, 5.0 / 9.0)] {
            assert!((row[&l(y)] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn group_translation() {
        let ring = FusionRing::group_dual(FiniteGroup::cyclic(3).unwrap());
        let w = CentralWalk::new(ring, ProbMeasure::point(l(1))).unwrap();
        assert_eq!(w.transition_row(&l(0)).unwrap(), BTreeMap::from([(l(1), 1.0)]));
    }

    #[test]
    fn n_step_examples() {
        let w = su2_walk(2.5, "1:1");
        assert_eq!(w.n_step(&l(4), 0).unwrap(), BTreeMap::from([(l(4), 1.0)]));
        let two = w.n_step(&l(0), 2).unwrap();
        assert!((two[&l(0)] - 0.16).abs() < 1e-14);
        assert!((two[&l(2)] - 0.84).abs() < 1e-14);
        let from1 = w.n_step(&l(1), 2).unwrap();
        assert_eq!(from1.keys().cloned().collect::<Vec<_>>(), vec![l(1), l(3)]);
        assert!((from1.values().sum::<f64>() - 1.0).abs() < 1e-14);

        let z2 = FusionRing::group_dual(FiniteGroup::cyclic(2).unwrap());
        let w = CentralWalk::new(z2, ProbMeasure::point(l(1))).unwrap();
        assert_eq!(w.n_step(&l(0), 3).unwrap(), BTreeMap::from([(l(1), 1.0)]));
    }

    #[test]
    fn n_step_resource_error() {
        let w = su2_walk(2.5, "3:1");
        assert!(matches!(
            w.n_step(&l(0), usize::MAX / 4),
            Err(WalkError::Resource(_))
        ));
    }

    #[test]
    fn generation() {
        let su2 = FusionRing::su2(2.5).unwrap();
        let check = |mu: &str| is_generating(&su2, &ProbMeasure::parse_compact(mu).unwrap(), 50).unwrap();
        assert_eq!(check("1:1"), Generation::Generating);
        assert_eq!(check("2:1"), Generation::ProvenNotGenerating);
        assert_eq!(check("0:1"), Generation::ProvenNotGenerating);
        assert_eq!(check("3:1"), Generation::Generating);
        assert_eq!(check("2:0.5,4:0.5"), Generation::ProvenNotGenerating);

        let so3 = FusionRing::so3(5.0).unwrap();
        assert_eq!(
            is_generating(&so3, &ProbMeasure::point(l(0)), 10).unwrap(),
            Generation::ProvenNotGenerating
        );
        assert_eq!(
            is_generating(&so3, &ProbMeasure::point(l(2)), 10).unwrap(),
            Generation::Generating
        );

        let z3 = FusionRing::group_dual(FiniteGroup::cyclic(3).unwrap());
        assert_eq!(
            is_generating(&z3, &ProbMeasure::point(l(1)), 5).unwrap(),
            Generation::Generating
        );
        let s3 = FusionRing::group_dual(FiniteGroup::symmetric3());
        // a transposition generates only a subgroup of order 2
        assert_eq!(
            is_generating(&s3, &ProbMeasure::point(l(1)), 5).unwrap(),
            Generation::ProvenNotGenerating
        );
        // two transpositions generate S3
        let mu = ProbMeasure::new(vec![(l(1), 0.5), (l(2), 0.5)]).unwrap();
        assert_eq!(is_generating(&s3, &mu, 10).unwrap(), Generation::Generating);

        // stuck in the second factor, never closes in the first
        let prod = FusionRing::product(su2.clone(), so3.clone());
        let mu = ProbMeasure::point(Label::pair(l(1), l(0)));
        assert_eq!(
            is_generating(&prod, &mu, 20).unwrap(),
            Generation::NotGeneratingWithinHorizon
        );
        let mu = ProbMeasure::point(Label::pair(l(1), l(1)));
        assert_eq!(is_generating(&prod, &mu, 20).unwrap(), Generation::Generating);
    }

    #[test]
    fn periods() {
        assert_eq!(su2_walk(2.5, "1:1").period(), Some(2));
        assert_eq!(su2_walk(2.5, "1:0.5,2:0.5").period(), Some(1));
        let z2 = FusionRing::group_dual(FiniteGroup::cyclic(2).unwrap());
        let w = CentralWalk::new(z2, ProbMeasure::point(l(1))).unwrap();
        assert_eq!(w.period(), Some(2));
        let z3 = FusionRing::group_dual(FiniteGroup::cyclic(3).unwrap());
        let w = CentralWalk::new(z3, ProbMeasure::point(l(1))).unwrap();
        assert_eq!(w.period(), Some(3));
    }

    #[test]
    fn cached_log_dims_match_direct() {
        let w = su2_walk(3.5, "1:0.2,2:0.3,3:0.5");
        w.n_step(&l(0), 60).unwrap();
        for n in 0..100u32 {
            let Ok(i) = w.state_id(&l(n)) else { continue };
            let direct = w.ring().log_quantum_dimension(&l(n)).unwrap();
            let cached = w.cache.read().unwrap().log_dims[i];
            assert!((direct - cached).abs() < 1e-12 * direct.max(1.0), "n={n}");
        }
    }

    #[test]
    fn concurrent_readers() {
        let w = Arc::new(su2_walk(2.5, "1:0.5,2:0.5"));
        let handles: Vec<_> = (0..4)
            .map(|k| {
                let w = Arc::clone(&w);
                std::thread::spawn(move || {
                    let d = w.n_step(&l(k), 40).unwrap();
                    d.values().sum::<f64>()
                })
            })
            .collect();
        for h in handles {
            assert!((h.join().unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
