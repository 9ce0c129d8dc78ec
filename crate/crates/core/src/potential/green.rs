use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use super::PotentialError;
use crate::fusion::Label;
use crate::walk::{CentralWalk, Distribution};

/// Entries of an evolving distribution below this mass are dropped; they
/// cannot move any partial sum of order one.
pub(crate) const PRUNE_FLOOR: f64 = 1e-300;

/// Hard cap on the number of series terms.
pub const DEFAULT_MAX_TERMS: usize = 100_000;

/// An entry counts as converged only if its tail is below this fraction of
/// its value, whatever tolerance was requested.
pub const CONVERGED_REL_TAIL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenOptions {
    /// Relative tail tolerance.
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for GreenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_terms: DEFAULT_MAX_TERMS,
        }
    }
}

impl GreenOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// How a Green value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenMethod {
    /// Truncated series with a geometric tail estimate.
    Series,
    /// Exact network formula of [`green_nearest_neighbour`].
    ClosedForm,
}

/// One Green-kernel value `G(x, y) = Σ_n p_n(x, y)` with its truncation data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenEntry {
    pub x: Label,
    pub y: Label,
    pub value: f64,
    pub tail_estimate: f64,
    pub terms_used: usize,
    pub converged: bool,
    pub method: GreenMethod,
}

// Running sum for one target, with the last four terms for the
// same-parity ratio test.
struct Series {
    sum: f64,
    last: [f64; 4], // last[k] = a_{n-k}
    nonzero_seen: [bool; 2],
    done: Option<(f64, usize)>,
}

impl Series {
    fn new() -> Self {
        Self {
            sum: 0.0,
            last: [0.0; 4],
            nonzero_seen: [false; 2],
            done: None,
        }
    }

    fn push(&mut self, n: usize, a: f64) {
        self.sum += a;
        self.last = [a, self.last[0], self.last[1], self.last[2]];
        if a > 0.0 {
            self.nonzero_seen[n % 2] = true;
        }
    }

    // Geometric extrapolation per parity class: with r = a_n / a_{n−2},
    // the class contributes a_n·r/(1−r). A class that has never been charged
    // contributes nothing when the walk is periodic with even period.
    fn tail(&self, n: usize, even_period: bool) -> f64 {
        let mut tail = 0.0;
        for (cur, prev, class) in [(self.last[0], self.last[2], n % 2), (self.last[1], self.last[3], (n + 1) % 2)] {
            if !self.nonzero_seen[class] {
                if even_period {
                    continue;
                }
                return f64::INFINITY;
            }
            if cur == 0.0 {
                continue;
            }
            if prev <= 0.0 {
                return f64::INFINITY;
            }
            let r = cur / prev;
            if r >= 1.0 {
                return f64::INFINITY;
            }
            tail += cur * r / (1.0 - r);
        }
        tail
    }
}

fn nearest_neighbour_step(walk: &CentralWalk) -> Option<f64> {
    let mu = walk.measure();
    let ring = walk.ring();
    if ring.su2_parameter().is_none() && ring.so3_parameter().is_none() {
        return None;
    }
    if mu.support().any(|z| z.index().is_none_or(|i| i > 1)) {
        return None;
    }
    let m1 = mu.weight(&Label::Index(1));
    (m1 > 0.0).then_some(m1)
}

/// Whether the ring's dimensions grow polynomially (t = 2, δ² = 4), so that
/// `p_n(x, y)` decays polynomially and no geometric tail applies.
fn kac_type(walk: &CentralWalk) -> bool {
    let ring = walk.ring();
    ring.su2_parameter().is_some_and(|t| t <= 2.0 + 1e-12)
        || ring.so3_parameter().is_some_and(|d2| d2 <= 4.0 + 1e-12)
}

/// Exact `G(x, y)` when `supp μ ⊆ {0, 1}` on an su2 or so3 ring; `None`
/// for other walks.
///
/// Such a walk is the random walk on the half-line network with vertex
/// weights `π(k) = d_k²` and conductances `c(k, k+1) = π(k) p(k, k+1)`, so
/// `G(x, y) = π(y) R(max(x, y))` with `R(a) = Σ_{k≥a} 1/c(k, k+1)`, the
/// resistance from `a` to infinity. With `q ∈ (0, 1]` defined by
/// `t = q + 1/q` (su2) or `δ = q + 1/q` (so3), the sums telescope:
///
/// * su2: `1/([k+1][k+2]) = q^{k+1}/[k+1] − q^{k+2}/[k+2]`, so
///   `R(a) = t q^{a+1} / (μ(1) d_a)`;
/// * so3: `1/([m][m+2]) = (q^m/[m] − q^{m+2}/[m+2]) / [2]` with `m = 2k+1`,
///   so `R(a) = (δ² − 1) q^{2a+1} / (μ(1) δ d_a)`.
pub fn green_nearest_neighbour(walk: &CentralWalk, x: &Label, y: &Label) -> Option<f64> {
    let m1 = nearest_neighbour_step(walk)?;
    let ring = walk.ring();
    let a = x.index()?.max(y.index()?);
    let ld_y = ring.log_quantum_dimension(y).ok()?;
    let ld_a = ring.log_quantum_dimension(&Label::Index(a)).ok()?;
    let q_of = |s: f64| 2.0 / (s + (s * s - 4.0).max(0.0).sqrt());
    let (scale, q_power) = if let Some(t) = ring.su2_parameter() {
        (t / m1, f64::from(a + 1) * q_of(t).ln())
    } else {
        let d2 = ring.so3_parameter()?;
        let delta = d2.sqrt();
        ((d2 - 1.0) / (m1 * delta), f64::from(2 * a + 1) * q_of(delta).ln())
    };
    Some(scale * (2.0 * ld_y + q_power - ld_a).exp())
}

/// `G(x, y)` for every `y` in `ys`, from a single exact evolution of the
/// law of the walk started at `x`.
///
/// Nearest-neighbour walks on rings with `t = 2` or `δ² = 4` have
/// polynomially decaying terms; they use [`green_nearest_neighbour`]
/// instead, recorded as [`GreenMethod::ClosedForm`].
pub fn green_row(
    walk: &CentralWalk,
    x: &Label,
    ys: &[Label],
    opts: &GreenOptions,
) -> Result<Vec<GreenEntry>, PotentialError> {
    if !(opts.tol > 0.0) {
        return Err(PotentialError::InvalidInput(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if kac_type(walk) && nearest_neighbour_step(walk).is_some() {
        walk.state_id(x)?;
        return ys
            .iter()
            .map(|y| {
                walk.state_id(y)?;
                let value = green_nearest_neighbour(walk, x, y).expect("nearest-neighbour walk");
                Ok(GreenEntry {
                    x: x.clone(),
                    y: y.clone(),
                    value,
                    tail_estimate: 0.0,
                    terms_used: 0,
                    converged: true,
                    method: GreenMethod::ClosedForm,
                })
            })
            .collect();
    }
    let start = walk.state_id(x)?;
    let targets = ys
        .iter()
        .map(|y| walk.state_id(y))
        .collect::<Result<Vec<_>, _>>()?;
    let even_period = walk.period().is_some_and(|p| p % 2 == 0);
    let rel = opts.tol.min(CONVERGED_REL_TAIL);

    let mut series: Vec<Series> = targets.iter().map(|_| Series::new()).collect();
    let mut dist = Distribution::point(start);
    let mut remaining = targets.len();
    let mut n = 0usize;
    loop {
        for (s, &j) in series.iter_mut().zip(&targets) {
            if s.done.is_none() {
                s.push(n, dist.get(j));
            }
        }
        if n >= 3 {
            for s in series.iter_mut().filter(|s| s.done.is_none()) {
                let tail = s.tail(n, even_period);
                if s.sum > 0.0 && tail < rel * s.sum {
                    s.done = Some((tail, n + 1));
                    remaining -= 1;
                }
            }
        }
        if remaining == 0 {
            break;
        }
        if n + 1 >= opts.max_terms {
            let (k, s) = series
                .iter()
                .enumerate()
                .find(|(_, s)| s.done.is_none())
                .unwrap();
            return Err(PotentialError::NonConvergence {
                x: x.to_string(),
                y: ys[k].to_string(),
                terms: n + 1,
                partial_sum: s.sum,
                tail_estimate: s.tail(n, even_period),
            });
        }
        dist = walk.step(&dist, PRUNE_FLOOR);
        n += 1;
    }

    Ok(series
        .into_iter()
        .zip(ys)
        .map(|(s, y)| {
            let (tail, terms) = s.done.expect("all series converged");
            GreenEntry {
                x: x.clone(),
                y: y.clone(),
                value: s.sum,
                tail_estimate: tail,
                terms_used: terms,
                converged: true,
                method: GreenMethod::Series,
            }
        })
        .collect())
}

/// `G(x, y)`.
pub fn green(
    walk: &CentralWalk,
    x: &Label,
    y: &Label,
    opts: &GreenOptions,
) -> Result<GreenEntry, PotentialError> {
    Ok(green_row(walk, x, std::slice::from_ref(y), opts)?.remove(0))
}

/// Green-kernel values keyed by `(x, y)`.
///
/// Rows for distinct `x` are computed in parallel; inserts go through a
/// mutex so the table can also be filled from several threads by hand.
#[derive(Debug, Default)]
pub struct PotentialTable {
    entries: Mutex<BTreeMap<(Label, Label), GreenEntry>>,
}

impl PotentialTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn compute(
        walk: &CentralWalk,
        xs: &[Label],
        ys: &[Label],
        opts: &GreenOptions,
    ) -> Result<Self, PotentialError> {
        let table = Self::new();
        xs.par_iter().try_for_each(|x| {
            for e in green_row(walk, x, ys, opts)? {
                table.insert(e);
            }
            Ok::<_, PotentialError>(())
        })?;
        Ok(table)
    }

    pub fn insert(&self, entry: GreenEntry) {
        self.entries
            .lock()
            .unwrap()
            .insert((entry.x.clone(), entry.y.clone()), entry);
    }

    pub fn get(&self, x: &Label, y: &Label) -> Option<GreenEntry> {
        self.entries
            .lock()
            .unwrap()
            .get(&(x.clone(), y.clone()))
            .cloned()
    }

    pub fn value(&self, x: &Label, y: &Label) -> Option<f64> {
        self.get(x, y).map(|e| e.value)
    }

    /// Entries sorted by `(x, y)`.
    pub fn entries(&self) -> Vec<GreenEntry> {
        self.entries.lock().unwrap().values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// CSV with header `x,y,value,tail,terms`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "value", "tail", "terms"])?;
        for e in self.entries() {
            w.write_record([
                e.x.to_string(),
                e.y.to_string(),
                format!("{:e}", e.value),
                format!("{:e}", e.tail_estimate),
                e.terms_used.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The central reading of `K_μ(p_y) = G_μ(p_y) G_μ(p_ε)^{-1}` at `x`:
/// `G(x, y) / G(x, ε)`.
pub fn martin_paper(
    walk: &CentralWalk,
    x: &Label,
    y: &Label,
    opts: &GreenOptions,
) -> Result<f64, PotentialError> {
    let eps = walk.ring().epsilon();
    let row = green_row(walk, x, &[y.clone(), eps.clone()], opts)?;
    ratio(row[0].value, row[1].value, x, &eps)
}

/// Classical Martin kernel `G(x, y) / G(ε, y)`.
pub fn martin_std(
    walk: &CentralWalk,
    x: &Label,
    y: &Label,
    opts: &GreenOptions,
) -> Result<f64, PotentialError> {
    let eps = walk.ring().epsilon();
    let num = green(walk, x, y, opts)?.value;
    let den = green(walk, &eps, y, opts)?.value;
    ratio(num, den, &eps, y)
}

pub(crate) fn ratio(num: f64, den: f64, x: &Label, y: &Label) -> Result<f64, PotentialError> {
    if den < 1e-300 {
        return Err(PotentialError::DegenerateDenominator {
            x: x.to_string(),
            y: y.to_string(),
            value: den,
        });
    }
    Ok(num / den)
}
