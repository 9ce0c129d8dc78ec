use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FusionError, FusionRing, Label, MASS_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedLabel {
    pub label: Label,
    pub weight: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureDescriptor {
    support: Vec<WeightedLabel>,
}

/// A finitely supported probability measure on labels.
///
/// Zero weights are dropped, so the stored support is exactly the set of
/// charged labels. JSON form: `{"support":[{"label":1,"weight":0.5},…]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDescriptor", into = "MeasureDescriptor")]
pub struct ProbMeasure {
    weights: BTreeMap<Label, f64>,
}

impl ProbMeasure {
    pub fn new<I>(entries: I) -> Result<Self, FusionError>
    where
        I: IntoIterator<Item = (Label, f64)>,
    {
        let mut weights = BTreeMap::new();
        for (label, w) in entries {
            if !w.is_finite() || !(0.0..=1.0 + MASS_TOL).contains(&w) {
                return Err(FusionError::InvalidMeasure(format!(
                    "weight {w} of label {label} is not in [0, 1]"
                )));
            }
            if w > 0.0 {
                *weights.entry(label).or_insert(0.0) += w;
            }
        }
        if weights.is_empty() {
            return Err(FusionError::InvalidMeasure("empty support".into()));
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(FusionError::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// The Dirac measure `δ_x`.
    pub fn point(x: Label) -> Self {
        Self {
            weights: BTreeMap::from([(x, 1.0)]),
        }
    }

    pub fn uniform(labels: &[Label]) -> Result<Self, FusionError> {
        let w = 1.0 / labels.len() as f64;
        Self::new(labels.iter().map(|x| (x.clone(), w)))
    }

    /// Parses the compact form `"1:0.5,2:0.5"` for integer labels.
    pub fn parse_compact(s: &str) -> Result<Self, FusionError> {
        let mut entries = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (label, weight) = part.split_once(':').ok_or_else(|| {
                FusionError::InvalidMeasure(format!("expected label:weight, got {part:?}"))
            })?;
            let label: u32 = label.trim().parse().map_err(|_| {
                FusionError::InvalidMeasure(format!("bad label {label:?}"))
            })?;
            let weight: f64 = weight.trim().parse().map_err(|_| {
                FusionError::InvalidMeasure(format!("bad weight {weight:?}"))
            })?;
            entries.push((Label::Index(label), weight));
        }
        Self::new(entries)
    }

    pub fn weight(&self, x: &Label) -> f64 {
        self.weights.get(x).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = &Label> {
        self.weights.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, f64)> {
        self.weights.iter().map(|(x, w)| (x, *w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Fails with [`FusionError::RingMismatch`] if some charged label is
    /// not a label of `ring`.
    pub fn check_ring(&self, ring: &FusionRing) -> Result<(), FusionError> {
        match self.support().find(|x| !ring.contains(x)) {
            Some(x) => Err(FusionError::RingMismatch(format!(
                "label {x} is not in the {} ring",
                ring.kind_name()
            ))),
            None => Ok(()),
        }
    }
}

impl TryFrom<MeasureDescriptor> for ProbMeasure {
    type Error = FusionError;

    fn try_from(d: MeasureDescriptor) -> Result<Self, Self::Error> {
        Self::new(d.support.into_iter().map(|e| (e.label, e.weight)))
    }
}

impl From<ProbMeasure> for MeasureDescriptor {
    fn from(m: ProbMeasure) -> Self {
        MeasureDescriptor {
            support: m
                .weights
                .into_iter()
                .map(|(label, weight)| WeightedLabel { label, weight })
                .collect(),
        }
    }
}

/// Convolution on the fusion ring:
/// `(μ∗ν)(y) = Σ_{x,z} μ(x) ν(z) mult(y, x⊗z) dim_q(y) / (dim_q(x) dim_q(z))`.
pub fn convolve(
    ring: &FusionRing,
    mu: &ProbMeasure,
    nu: &ProbMeasure,
) -> Result<ProbMeasure, FusionError> {
    mu.check_ring(ring)?;
    nu.check_ring(ring)?;
    let mut out: BTreeMap<Label, f64> = BTreeMap::new();
    for (x, wx) in mu.iter() {
        let lx = ring.log_quantum_dimension(x)?;
        for (z, wz) in nu.iter() {
            let lz = ring.log_quantum_dimension(z)?;
            for (y, m) in ring.tensor_decompose(x, z)? {
                let ly = ring.log_quantum_dimension(&y)?;
                *out.entry(y).or_insert(0.0) += wx * wz * f64::from(m) * (ly - lx - lz).exp();
            }
        }
    }
    Ok(ProbMeasure {
        weights: out.into_iter().filter(|(_, w)| *w > 0.0).collect(),
    })
}

/// `μ^{*n}`, with `μ^{*0} = δ_ε`.
pub fn convolution_power(
    ring: &FusionRing,
    mu: &ProbMeasure,
    n: usize,
) -> Result<ProbMeasure, FusionError> {
    mu.check_ring(ring)?;
    let mut acc = ProbMeasure::point(ring.epsilon());
    for _ in 0..n {
        acc = convolve(ring, &acc, mu)?;
    }
    Ok(acc)
}

/// `μ̄(x) = μ(x̄)`.
pub fn reverse_measure(ring: &FusionRing, mu: &ProbMeasure) -> Result<ProbMeasure, FusionError> {
    mu.check_ring(ring)?;
    let weights = mu
        .iter()
        .map(|(x, w)| Ok((ring.conjugate(x)?, w)))
        .collect::<Result<BTreeMap<_, _>, FusionError>>()?;
    Ok(ProbMeasure { weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::FiniteGroup;

    fn l(n: u32) -> Label {
        Label::Index(n)
    }

    #[test]
    fn validation() {
        assert!(ProbMeasure::new(vec![]).is_err());
        assert!(ProbMeasure::new(vec![(l(1), 0.5)]).is_err());
        assert!(ProbMeasure::new(vec![(l(1), -0.5), (l(2), 1.5)]).is_err());
        assert!(ProbMeasure::new(vec![(l(1), f64::NAN)]).is_err());
        let m = ProbMeasure::new(vec![(l(1), 0.5), (l(2), 0.5), (l(3), 0.0)]).unwrap();
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn compact_form() {
        let m = ProbMeasure::parse_compact("1:0.5, 2:0.5").unwrap();
        assert_eq!(m.weight(&l(2)), 0.5);
        assert!(ProbMeasure::parse_compact("1-0.5").is_err());
        assert!(ProbMeasure::parse_compact("x:1").is_err());
        assert!(ProbMeasure::parse_compact("").is_err());
    }

    #[test]
    fn json_form() {
        let m: ProbMeasure =
            serde_json::from_str(r#"{"support":[{"label":1,"weight":0.7},{"label":2,"weight":0.3}]}"#)
                .unwrap();
        assert_eq!(m.weight(&l(1)), 0.7);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<ProbMeasure>(&s).unwrap(), m);
    }

    #[test]
    fn unit_of_convolution() {
        let r = FusionRing::su2(2.5).unwrap();
        let mu = ProbMeasure::parse_compact("1:0.25,2:0.75").unwrap();
        let e = ProbMeasure::point(r.epsilon());
        let left = convolve(&r, &e, &mu).unwrap();
        let right = convolve(&r, &mu, &e).unwrap();
        for x in mu.support() {
            assert!((left.weight(x) - mu.weight(x)).abs() < 1e-15);
            assert!((right.weight(x) - mu.weight(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn su2_square_of_fundamental() {
        // d = (1, 2.5, 5.25): δ_1∗δ_1 = {0: 1/6.25, 2: 5.25/6.25}
        let r = FusionRing::su2(2.5).unwrap();
        let d1 = ProbMeasure::point(l(1));
        let c = convolve(&r, &d1, &d1).unwrap();
        assert!((c.weight(&l(0)) - 0.16).abs() < 1e-14);
        assert!((c.weight(&l(2)) - 0.84).abs() < 1e-14);
        assert!((c.total_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn group_dual_convolution_is_translation() {
        let s3 = FusionRing::group_dual(FiniteGroup::symmetric3());
        let g = s3.group().unwrap().clone();
        for a in 0..6u32 {
            for b in 0..6u32 {
                let c = convolve(&s3, &ProbMeasure::point(l(a)), &ProbMeasure::point(l(b))).unwrap();
                let ab = g.mul(a as usize, b as usize) as u32;
                assert_eq!(c, ProbMeasure::point(l(ab)));
            }
        }
    }

    #[test]
    fn reversal() {
        let z3 = FusionRing::group_dual(FiniteGroup::cyclic(3).unwrap());
        let mu = ProbMeasure::new(vec![(l(1), 0.7), (l(2), 0.3)]).unwrap();
        let rev = reverse_measure(&z3, &mu).unwrap();
        assert_eq!(rev.weight(&l(2)), 0.7);
        assert_eq!(rev.weight(&l(1)), 0.3);
        assert_eq!(reverse_measure(&z3, &rev).unwrap(), mu);
        let su2 = FusionRing::su2(2.5).unwrap();
        let d1 = ProbMeasure::point(l(1));
        assert_eq!(reverse_measure(&su2, &d1).unwrap(), d1);
    }

    #[test]
    fn ring_mismatch() {
        let z3 = FusionRing::group_dual(FiniteGroup::cyclic(3).unwrap());
        let mu = ProbMeasure::point(l(7));
        let err = convolve(&z3, &mu, &mu).unwrap_err();
        assert!(matches!(err, FusionError::RingMismatch(_)));
    }
}
