//! Fusion rings of compact quantum groups.
//!
//! A [`FusionRing`] records what the central random walk needs from the
//! representation category: the label set `Irred(G)`, the multiplicities
//! `mult(z, x ⊗ y)`, the contragredient `x ↦ x̄` and the quantum dimension.
//! Four kinds are built in:
//!
//! * `su2`: SU(2)-type rules `x ⊗ y = |x−y| ⊕ (|x−y|+2) ⊕ … ⊕ (x+y)`, parameterized
//!   by the quantum dimension `t ≥ 2` of the fundamental representation
//!   (the rings of `A_o(F)` and `SU_q(2)`, `t = |q + 1/q|`);
//! * `so3`: SO(3)-type rules `x ⊗ y = |x−y| ⊕ … ⊕ (x+y)`, parameterized by `δ² ≥ 4`
//!   (the rings of the quantum automorphism groups `A_aut(D, ω)`);
//! * `group_dual`: the dual of a finite group, fusion is the group law;
//! * `product`: componentwise product of two rings.

mod group;
mod measure;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use group::FiniteGroup;
pub use measure::{convolve, convolution_power, reverse_measure, ProbMeasure, WeightedLabel};

/// Tolerance on the total mass of a probability measure.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("label {label} is not a label of the {ring} ring")]
    InvalidLabel { label: String, ring: String },
    #[error("invalid ring parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid group table: {0}")]
    InvalidGroupTable(String),
    #[error("quantum dimension of label {0} overflows a double")]
    Overflow(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("measure does not live on this ring: {0}")]
    RingMismatch(String),
}

/// An irreducible class. Integer-indexed rings (`su2`, `so3`) and group
/// duals use [`Label::Index`]; product rings use ordered pairs.
///
/// In JSON an index is a bare integer and a pair is a two-element array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Index(u32),
    Pair(Box<Label>, Box<Label>),
}

impl Label {
    pub fn pair(a: Label, b: Label) -> Self {
        Label::Pair(Box::new(a), Box::new(b))
    }

    pub fn index(&self) -> Option<u32> {
        match self {
            Label::Index(n) => Some(*n),
            Label::Pair(..) => None,
        }
    }
}

impl From<u32> for Label {
    fn from(n: u32) -> Self {
        Label::Index(n)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Index(n) => write!(f, "{n}"),
            Label::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Su2 { t: f64 },
    So3 { delta2: f64 },
    GroupDual(FiniteGroup),
    Product(Box<FusionRing>, Box<FusionRing>),
}

/// JSON descriptor of a ring, e.g. `{"kind":"su2","t":2.5}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RingDescriptor {
    Su2 {
        t: f64,
    },
    So3 {
        delta2: f64,
    },
    GroupDual {
        table: Vec<Vec<usize>>,
    },
    Product {
        left: Box<RingDescriptor>,
        right: Box<RingDescriptor>,
    },
}

/// A based ring with involution and quantum dimension.
///
/// Values are immutable after construction. Every constructor validates
/// its parameters, so all methods can assume a well-formed ring and only
/// fail on foreign labels or floating-point overflow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RingDescriptor", into = "RingDescriptor")]
pub struct FusionRing {
    kind: Kind,
}

impl FusionRing {
    /// SU(2)-type ring with fundamental quantum dimension `t ≥ 2`.
    pub fn su2(t: f64) -> Result<Self, FusionError> {
        if !t.is_finite() || t < 2.0 {
            return Err(FusionError::InvalidParameter(format!(
                "su2 ring needs t >= 2, got {t}"
            )));
        }
        Ok(Self {
            kind: Kind::Su2 { t },
        })
    }

    /// SU(2)-type ring of `SU_q(2)`, `t = |q| + 1/|q|`, `0 < |q| ≤ 1`.
    pub fn su2_from_q(q: f64) -> Result<Self, FusionError> {
        let a = q.abs();
        if !(a > 0.0 && a <= 1.0) {
            return Err(FusionError::InvalidParameter(format!(
                "q must satisfy 0 < |q| <= 1, got {q}"
            )));
        }
        Self::su2((a + 1.0 / a).max(2.0))
    }

    /// SO(3)-type ring with `δ² ≥ 4`; the fundamental label 1 has
    /// quantum dimension `δ² − 1`.
    pub fn so3(delta2: f64) -> Result<Self, FusionError> {
        if !delta2.is_finite() || delta2 < 4.0 {
            return Err(FusionError::InvalidParameter(format!(
                "so3 ring needs delta2 >= 4, got {delta2}"
            )));
        }
        Ok(Self {
            kind: Kind::So3 { delta2 },
        })
    }

    pub fn group_dual(group: FiniteGroup) -> Self {
        Self {
            kind: Kind::GroupDual(group),
        }
    }

    pub fn product(left: FusionRing, right: FusionRing) -> Self {
        Self {
            kind: Kind::Product(Box::new(left), Box::new(right)),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Su2 { .. } => "su2",
            Kind::So3 { .. } => "so3",
            Kind::GroupDual(_) => "group_dual",
            Kind::Product(..) => "product",
        }
    }

    /// `t` for su2 rings.
    pub fn su2_parameter(&self) -> Option<f64> {
        match self.kind {
            Kind::Su2 { t } => Some(t),
            _ => None,
        }
    }

    /// `δ²` for so3 rings.
    pub fn so3_parameter(&self) -> Option<f64> {
        match self.kind {
            Kind::So3 { delta2 } => Some(delta2),
            _ => None,
        }
    }

    pub fn group(&self) -> Option<&FiniteGroup> {
        match &self.kind {
            Kind::GroupDual(g) => Some(g),
            _ => None,
        }
    }

    pub fn components(&self) -> Option<(&FusionRing, &FusionRing)> {
        match &self.kind {
            Kind::Product(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Rings whose labels are the natural numbers (su2 and so3).
    pub fn is_integer_labeled(&self) -> bool {
        matches!(self.kind, Kind::Su2 { .. } | Kind::So3 { .. })
    }

    pub fn is_finite(&self) -> bool {
        match &self.kind {
            Kind::Su2 { .. } | Kind::So3 { .. } => false,
            Kind::GroupDual(_) => true,
            Kind::Product(a, b) => a.is_finite() && b.is_finite(),
        }
    }

    /// The trivial representation ε.
    pub fn epsilon(&self) -> Label {
        match &self.kind {
            Kind::Su2 { .. } | Kind::So3 { .. } => Label::Index(0),
            Kind::GroupDual(g) => Label::Index(g.identity() as u32),
            Kind::Product(a, b) => Label::pair(a.epsilon(), b.epsilon()),
        }
    }

    pub fn contains(&self, x: &Label) -> bool {
        match (&self.kind, x) {
            (Kind::Su2 { .. } | Kind::So3 { .. }, Label::Index(_)) => true,
            (Kind::GroupDual(g), Label::Index(i)) => (*i as usize) < g.order(),
            (Kind::Product(a, b), Label::Pair(x1, x2)) => a.contains(x1) && b.contains(x2),
            _ => false,
        }
    }

    pub fn check_label(&self, x: &Label) -> Result<(), FusionError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(FusionError::InvalidLabel {
                label: x.to_string(),
                ring: self.kind_name().to_string(),
            })
        }
    }

    /// The nonzero multiplicities `z ↦ mult(z, x ⊗ y)`.
    pub fn tensor_decompose(
        &self,
        x: &Label,
        y: &Label,
    ) -> Result<BTreeMap<Label, u32>, FusionError> {
        self.check_label(x)?;
        self.check_label(y)?;
        Ok(self.decompose_unchecked(x, y))
    }

    fn decompose_unchecked(&self, x: &Label, y: &Label) -> BTreeMap<Label, u32> {
        match (&self.kind, x, y) {
            (Kind::Su2 { .. }, Label::Index(a), Label::Index(b)) => {
                (a.abs_diff(*b)..=a + b)
                    .step_by(2)
                    .map(|z| (Label::Index(z), 1))
                    .collect()
            }
            (Kind::So3 { .. }, Label::Index(a), Label::Index(b)) => (a.abs_diff(*b)..=a + b)
                .map(|z| (Label::Index(z), 1))
                .collect(),
            (Kind::GroupDual(g), Label::Index(a), Label::Index(b)) => {
                let z = g.mul(*a as usize, *b as usize) as u32;
                BTreeMap::from([(Label::Index(z), 1)])
            }
            (Kind::Product(r1, r2), Label::Pair(x1, x2), Label::Pair(y1, y2)) => {
                let left = r1.decompose_unchecked(x1, y1);
                let right = r2.decompose_unchecked(x2, y2);
                let mut out = BTreeMap::new();
                for (z1, m1) in &left {
                    for (z2, m2) in &right {
                        out.insert(Label::pair(z1.clone(), z2.clone()), m1 * m2);
                    }
                }
                out
            }
            _ => unreachable!("labels were checked against the ring"),
        }
    }

    /// `mult(z, x ⊗ y)`.
    pub fn mult(&self, z: &Label, x: &Label, y: &Label) -> Result<u32, FusionError> {
        self.check_label(z)?;
        self.check_label(x)?;
        self.check_label(y)?;
        Ok(self.mult_unchecked(z, x, y))
    }

    fn mult_unchecked(&self, z: &Label, x: &Label, y: &Label) -> u32 {
        match (&self.kind, z, x, y) {
            (Kind::Su2 { .. }, Label::Index(c), Label::Index(a), Label::Index(b)) => {
                u32::from(a.abs_diff(*b) <= *c && *c <= a + b && (a + b + c) % 2 == 0)
            }
            (Kind::So3 { .. }, Label::Index(c), Label::Index(a), Label::Index(b)) => {
                u32::from(a.abs_diff(*b) <= *c && *c <= a + b)
            }
            (Kind::GroupDual(g), Label::Index(c), Label::Index(a), Label::Index(b)) => {
                u32::from(g.mul(*a as usize, *b as usize) == *c as usize)
            }
            (
                Kind::Product(r1, r2),
                Label::Pair(z1, z2),
                Label::Pair(x1, x2),
                Label::Pair(y1, y2),
            ) => r1.mult_unchecked(z1, x1, y1) * r2.mult_unchecked(z2, x2, y2),
            _ => unreachable!("labels were checked against the ring"),
        }
    }

    /// The contragredient `x̄`.
    pub fn conjugate(&self, x: &Label) -> Result<Label, FusionError> {
        self.check_label(x)?;
        Ok(self.conjugate_unchecked(x))
    }

    fn conjugate_unchecked(&self, x: &Label) -> Label {
        match (&self.kind, x) {
            (Kind::GroupDual(g), Label::Index(a)) => Label::Index(g.inv(*a as usize) as u32),
            (Kind::Product(r1, r2), Label::Pair(a, b)) => {
                Label::pair(r1.conjugate_unchecked(a), r2.conjugate_unchecked(b))
            }
            _ => x.clone(),
        }
    }

    /// `dim_q(x)`, by the two-term recursion forced by dimension
    /// multiplicativity with the fundamental label.
    pub fn quantum_dimension(&self, x: &Label) -> Result<f64, FusionError> {
        self.check_label(x)?;
        let d = self.dim_unchecked(x);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(FusionError::Overflow(x.to_string()))
        }
    }

    fn dim_unchecked(&self, x: &Label) -> f64 {
        match (&self.kind, x) {
            (Kind::Su2 { t }, Label::Index(n)) => three_term(1.0, *t, *t, *n),
            (Kind::So3 { delta2 }, Label::Index(n)) => {
                let d1 = delta2 - 1.0;
                three_term(1.0, d1, d1 - 1.0, *n)
            }
            (Kind::GroupDual(_), _) => 1.0,
            (Kind::Product(r1, r2), Label::Pair(a, b)) => r1.dim_unchecked(a) * r2.dim_unchecked(b),
            _ => unreachable!("labels were checked against the ring"),
        }
    }

    /// `ln dim_q(x)`, computed through the ratios `d_{n}/d_{n−1}` so that it
    /// stays finite for labels whose dimension overflows a double.
    pub fn log_quantum_dimension(&self, x: &Label) -> Result<f64, FusionError> {
        self.check_label(x)?;
        Ok(self.log_dim_unchecked(x))
    }

    fn log_dim_unchecked(&self, x: &Label) -> f64 {
        match (&self.kind, x) {
            (Kind::Su2 { t }, Label::Index(n)) => log_three_term(*t, *t, *n),
            (Kind::So3 { delta2 }, Label::Index(n)) => {
                let d1 = delta2 - 1.0;
                log_three_term(d1, d1 - 1.0, *n)
            }
            (Kind::GroupDual(_), _) => 0.0,
            (Kind::Product(r1, r2), Label::Pair(a, b)) => {
                r1.log_dim_unchecked(a) + r2.log_dim_unchecked(b)
            }
            _ => unreachable!("labels were checked against the ring"),
        }
    }

    /// Labels of size at most `bound`: `0..=bound` for integer rings, every
    /// element for group duals, and the cartesian product for products.
    pub fn labels_up_to(&self, bound: u32) -> Vec<Label> {
        match &self.kind {
            Kind::Su2 { .. } | Kind::So3 { .. } => (0..=bound).map(Label::Index).collect(),
            Kind::GroupDual(g) => (0..g.order() as u32).map(Label::Index).collect(),
            Kind::Product(a, b) => {
                let right = b.labels_up_to(bound);
                a.labels_up_to(bound)
                    .into_iter()
                    .flat_map(|x| right.iter().map(move |y| Label::pair(x.clone(), y.clone())))
                    .collect()
            }
        }
    }

    /// All labels of a finite ring.
    pub fn all_labels(&self) -> Option<Vec<Label>> {
        self.is_finite().then(|| self.labels_up_to(0))
    }

    /// Integer height of a label: the index for su2/so3, zero for group
    /// elements, additive on pairs. Used for bounded ramp test functions.
    pub fn height(&self, x: &Label) -> u64 {
        match (&self.kind, x) {
            (Kind::Su2 { .. } | Kind::So3 { .. }, Label::Index(n)) => u64::from(*n),
            (Kind::Product(r1, r2), Label::Pair(a, b)) => r1.height(a) + r2.height(b),
            _ => 0,
        }
    }

    /// A set of labels whose tensor powers contain every label.
    pub fn generators(&self) -> Vec<Label> {
        match &self.kind {
            Kind::Su2 { .. } | Kind::So3 { .. } => vec![Label::Index(1)],
            Kind::GroupDual(g) => (0..g.order())
                .filter(|&i| i != g.identity())
                .map(|i| Label::Index(i as u32))
                .collect(),
            Kind::Product(a, b) => {
                let ea = a.epsilon();
                let eb = b.epsilon();
                a.generators()
                    .into_iter()
                    .map(|x| Label::pair(x, eb.clone()))
                    .chain(b.generators().into_iter().map(|y| Label::pair(ea.clone(), y)))
                    .collect()
            }
        }
    }

    /// The finite grading ring: su2 is graded by parity, so3 trivially,
    /// a group dual by itself, products componentwise. Every fusion product
    /// `x ⊗ y` lives in degree `grade(x)·grade(y)`.
    pub fn grading_ring(&self) -> FusionRing {
        match &self.kind {
            Kind::Su2 { .. } => FusionRing::group_dual(FiniteGroup::cyclic(2).unwrap()),
            Kind::So3 { .. } => FusionRing::group_dual(FiniteGroup::cyclic(1).unwrap()),
            Kind::GroupDual(g) => FusionRing::group_dual(g.clone()),
            Kind::Product(a, b) => FusionRing::product(a.grading_ring(), b.grading_ring()),
        }
    }

    pub fn grade(&self, x: &Label) -> Label {
        match (&self.kind, x) {
            (Kind::Su2 { .. }, Label::Index(n)) => Label::Index(n % 2),
            (Kind::So3 { .. }, _) => Label::Index(0),
            (Kind::GroupDual(_), _) => x.clone(),
            (Kind::Product(a, b), Label::Pair(x1, x2)) => Label::pair(a.grade(x1), b.grade(x2)),
            _ => unreachable!("grade of a foreign label"),
        }
    }

    /// Largest index shift one fusion step with `z` can cause, for
    /// integer rings (`|y − x| ≤ z` whenever `mult(y, x ⊗ z) > 0`).
    pub fn step_bound(&self, z: &Label) -> Option<u32> {
        if self.is_integer_labeled() {
            z.index()
        } else {
            None
        }
    }

    pub fn descriptor(&self) -> RingDescriptor {
        match &self.kind {
            Kind::Su2 { t } => RingDescriptor::Su2 { t: *t },
            Kind::So3 { delta2 } => RingDescriptor::So3 { delta2: *delta2 },
            Kind::GroupDual(g) => RingDescriptor::GroupDual {
                table: g.table().to_vec(),
            },
            Kind::Product(a, b) => RingDescriptor::Product {
                left: Box::new(a.descriptor()),
                right: Box::new(b.descriptor()),
            },
        }
    }
}

/// Product ring with componentwise fusion, conjugation and dimension.
pub fn product_ring(r1: &FusionRing, r2: &FusionRing) -> FusionRing {
    FusionRing::product(r1.clone(), r2.clone())
}

impl TryFrom<RingDescriptor> for FusionRing {
    type Error = FusionError;

    fn try_from(d: RingDescriptor) -> Result<Self, Self::Error> {
        match d {
            RingDescriptor::Su2 { t } => FusionRing::su2(t),
            RingDescriptor::So3 { delta2 } => FusionRing::so3(delta2),
            RingDescriptor::GroupDual { table } => {
                Ok(FusionRing::group_dual(FiniteGroup::from_table(table)?))
            }
            RingDescriptor::Product { left, right } => Ok(FusionRing::product(
                FusionRing::try_from(*left)?,
                FusionRing::try_from(*right)?,
            )),
        }
    }
}

impl From<FusionRing> for RingDescriptor {
    fn from(r: FusionRing) -> Self {
        r.descriptor()
    }
}

// d_0 = 1, d_1 = first, d_{k+1} = a·d_k − d_{k−1}
fn three_term(d0: f64, first: f64, a: f64, n: u32) -> f64 {
    if n == 0 {
        return d0;
    }
    let (mut prev, mut cur) = (d0, first);
    for _ in 1..n {
        let next = a * cur - prev;
        prev = cur;
        cur = next;
        if !cur.is_finite() {
            break;
        }
    }
    cur
}

// Same recursion through r_k = d_k / d_{k−1}: r_1 = first, r_{k+1} = a − 1/r_k.
fn log_three_term(first: f64, a: f64, n: u32) -> f64 {
    let mut r = first;
    let mut acc = 0.0;
    for k in 1..=n {
        if k > 1 {
            r = a - 1.0 / r;
        }
        acc += r.ln();
    }
    acc
}
