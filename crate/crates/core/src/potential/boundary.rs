use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::green::{green_row, ratio, GreenOptions, PRUNE_FLOOR};
use super::PotentialError;
use crate::fusion::Label;
use crate::walk::{CentralWalk, Distribution};

/// Oscillation threshold for the triviality verdict.
pub const TRIVIALITY_TOL: f64 = 1e-4;

/// Label used to measure the drift of integer-labeled walks.
const FAR_LABEL: u32 = 4_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transience {
    Transient,
    Recurrent,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransienceReport {
    pub verdict: Transience,
    /// `E[Δ index]` from a far label, for integer-labeled rings.
    pub drift: Option<f64>,
    /// `(N, Σ_{n<N} p_n(ε, ε))`.
    pub partial_sums: Vec<(usize, f64)>,
    pub note: String,
}

/// Heuristic transience check.
///
/// Finite chains are recurrent. For su2 rings with `t > 2` and so3 rings with
/// `δ² > 4` the walk has a drift bounded away from zero at large labels and
/// is declared transient when that drift is positive. Everything else is
/// undecided, with the partial Green sums at the origin as evidence.
pub fn transience_diagnostic(walk: &CentralWalk) -> Result<TransienceReport, PotentialError> {
    let ring = walk.ring();
    let eps = ring.epsilon();
    let partial_sums = partial_green_sums(walk, &eps, &[100, 1_000])?;

    if ring.is_finite() {
        return Ok(TransienceReport {
            verdict: Transience::Recurrent,
            drift: None,
            partial_sums,
            note: "finite state space".into(),
        });
    }
    let strict = ring.su2_parameter().is_some_and(|t| t > 2.0 + 1e-12)
        || ring.so3_parameter().is_some_and(|d2| d2 > 4.0 + 1e-12);
    let drift = if ring.is_integer_labeled() {
        let far = Label::Index(FAR_LABEL);
        let row = walk.transition_row(&far)?;
        Some(
            row.iter()
                .map(|(y, p)| p * (f64::from(y.index().unwrap()) - f64::from(FAR_LABEL)))
                .sum::<f64>(),
        )
    } else {
        None
    };
    let (verdict, note) = match drift {
        Some(d) if strict && d > 1e-3 => (
            Transience::Transient,
            format!("drift {d:.6} > 0 at label {FAR_LABEL}"),
        ),
        Some(d) => (
            Transience::Undecided,
            format!("drift {d:.3e} at label {FAR_LABEL} is not bounded away from zero"),
        ),
        None => (
            Transience::Undecided,
            "no drift criterion for this ring; see partial sums".into(),
        ),
    };
    Ok(TransienceReport {
        verdict,
        drift,
        partial_sums,
        note,
    })
}

fn partial_green_sums(
    walk: &CentralWalk,
    x: &Label,
    checkpoints: &[usize],
) -> Result<Vec<(usize, f64)>, PotentialError> {
    let i = walk.state_id(x)?;
    let mut dist = Distribution::point(i);
    let mut sum = 0.0;
    let mut out = Vec::new();
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    for n in 0..last {
        sum += dist.get(i);
        if checkpoints.contains(&(n + 1)) {
            out.push((n + 1, sum));
        }
        dist = walk.step(&dist, PRUNE_FLOOR);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Triviality {
    Trivial,
    NontrivialEvidence,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunctionResult {
    pub name: String,
    /// Oscillation of the averaged function over the window, per block length.
    pub oscillation: Vec<(usize, f64)>,
}

/// Outcome of a Martin-limit or Poisson-triviality computation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryReport {
    /// Candidate harmonic function on the tested window.
    pub harmonic: Vec<(Label, f64)>,
    /// `max_x |Σ_y p(x,y) h(y) − h(x)|` over the window.
    pub harmonicity_defect: f64,
    /// Martin limits: sup-difference between consecutive ray points.
    pub history: Vec<f64>,
    pub converged: bool,
    pub verdict: Option<Triviality>,
    pub period: Option<usize>,
    pub test_functions: Vec<TestFunctionResult>,
}

/// Limit of the classical Martin kernel of the reversed walk,
/// `K_μ̄(x, y) = G_μ̄(x, y) / G_μ̄(ε, y)`, along `ray`.
///
/// Converged when the sup over `xs` of `|K(x, y_j) − K(x, y_{j−1})|` at the
/// last ray point is below `tol`. The limit `h` is harmonic for the reversed
/// walk, and its defect is measured against that walk.
pub fn martin_limit(
    walk: &CentralWalk,
    xs: &[Label],
    ray: &[Label],
    tol: f64,
    opts: &GreenOptions,
) -> Result<BoundaryReport, PotentialError> {
    if ray.len() < 2 || ray.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PotentialError::InvalidInput(
            "ray must have at least two strictly increasing labels".into(),
        ));
    }
    if xs.is_empty() {
        return Err(PotentialError::InvalidInput("no evaluation labels".into()));
    }
    if transience_diagnostic(walk)?.verdict == Transience::Recurrent {
        return Err(PotentialError::Recurrent);
    }
    let rev = walk.reversed()?;
    let eps = walk.ring().epsilon();

    // h has to be known on the one-step neighbourhood of xs for the defect
    let mut window: BTreeSet<Label> = xs.iter().cloned().collect();
    window.insert(eps.clone());
    for x in xs {
        window.extend(rev.transition_row(x)?.into_keys());
    }
    let window: Vec<Label> = window.into_iter().collect();

    let rows = window
        .par_iter()
        .map(|x| green_row(&rev, x, ray, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let eps_pos = window.iter().position(|x| *x == eps).unwrap();
    let kernel = |j: usize| -> Result<Vec<f64>, PotentialError> {
        let den = rows[eps_pos][j].value;
        rows.iter()
            .map(|r| ratio(r[j].value, den, &eps, &ray[j]))
            .collect()
    };

    let in_xs: Vec<bool> = window.iter().map(|x| xs.contains(x)).collect();
    let mut history = Vec::with_capacity(ray.len() - 1);
    let mut prev = kernel(0)?;
    for j in 1..ray.len() {
        let cur = kernel(j)?;
        let sup = cur
            .iter()
            .zip(&prev)
            .zip(&in_xs)
            .filter(|(_, keep)| **keep)
            .map(|((a, b), _)| (a - b).abs())
            .fold(0.0, f64::max);
        history.push(sup);
        prev = cur;
    }
    let converged = *history.last().unwrap() < tol;
    if !converged {
        return Err(PotentialError::MartinNotConverged { history });
    }

    let h: Vec<(Label, f64)> = window.iter().cloned().zip(prev.iter().copied()).collect();
    let lookup = |y: &Label| h.iter().find(|(z, _)| z == y).map(|(_, v)| *v);
    let mut defect: f64 = 0.0;
    for x in xs {
        let ph: f64 = rev
            .transition_row(x)?
            .iter()
            .map(|(y, p)| p * lookup(y).expect("window holds the neighbourhood"))
            .sum();
        defect = defect.max((ph - lookup(x).unwrap()).abs());
    }
    Ok(BoundaryReport {
        harmonic: h
            .into_iter()
            .filter(|(x, _)| xs.contains(x))
            .collect(),
        harmonicity_defect: defect,
        history,
        converged,
        verdict: None,
        period: walk.period(),
        test_functions: Vec::new(),
    })
}

struct TestFunction {
    name: String,
    f: Box<dyn Fn(&Label) -> f64 + Sync>,
}

fn test_functions(walk: &CentralWalk, labels: &[Label], window: u32) -> Vec<TestFunction> {
    let ring = walk.ring().clone();
    let mut fs: Vec<TestFunction> = vec![TestFunction {
        name: "constant".into(),
        f: Box::new(|_| 1.0),
    }];
    for x in labels.iter().take(6) {
        let x = x.clone();
        fs.push(TestFunction {
            name: format!("indicator[{x}]"),
            f: Box::new(move |y| f64::from(u8::from(*y == x))),
        });
    }
    let r = ring.clone();
    fs.push(TestFunction {
        name: "parity".into(),
        f: Box::new(move |y| if r.height(y) % 2 == 0 { 1.0 } else { -1.0 }),
    });
    if window > 0 {
        let r = ring;
        let w = f64::from(window);
        fs.push(TestFunction {
            name: "ramp".into(),
            f: Box::new(move |y| (r.height(y) as f64).min(w) / w),
        });
    }
    fs
}

/// Cesàro test for bounded central harmonic functions.
///
/// A family of bounded test functions (the constant, indicators of labels,
/// the height parity, a ramp saturating at `window`) is averaged along the
/// walk started at every label of height `≤ window`, using block averages
/// `A_N f = (1/N) Σ_{n=N}^{2N−1} P^n f` for `N = 1, 2, 4, …, ≤ n_max`.
/// Block averages have the same limits as plain Cesàro means and neutralize
/// periodicity the same way. The verdict is `trivial` as soon as every
/// averaged function is constant on the window up to [`TRIVIALITY_TOL`].
pub fn poisson_triviality_test(
    walk: &CentralWalk,
    window: u32,
    n_max: usize,
) -> Result<BoundaryReport, PotentialError> {
    if n_max == 0 {
        return Err(PotentialError::InvalidInput("n_max must be positive".into()));
    }
    let labels = walk.ring().labels_up_to(window);
    let fs = test_functions(walk, &labels, window);
    let starts = labels
        .iter()
        .map(|x| walk.state_id(x))
        .collect::<Result<Vec<_>, _>>()?;

    let mut dists: Vec<Distribution> = starts.iter().map(|&i| Distribution::point(i)).collect();
    let mut osc_history: Vec<Vec<(usize, f64)>> = vec![Vec::new(); fs.len()];
    let mut n_done = 0usize; // distributions are at time n_done
    let mut block = 1usize;
    let mut verdict = None;

    while block <= n_max {
        // advance to time 2·block − 1, summing P^n f over [block, 2·block)
        let results: Vec<(Distribution, Vec<f64>)> = dists
            .into_par_iter()
            .map(|mut d| {
                let mut sums = vec![0.0; fs.len()];
                let mut n = n_done;
                while n < 2 * block - 1 {
                    d = walk.step(&d, PRUNE_FLOOR);
                    n += 1;
                    if n >= block {
                        let labels = walk.labels_of(&d.entries.iter().map(|(i, _)| *i).collect::<Vec<_>>());
                        for (k, tf) in fs.iter().enumerate() {
                            sums[k] += d
                                .entries
                                .iter()
                                .zip(&labels)
                                .map(|((_, m), y)| m * (tf.f)(y))
                                .sum::<f64>();
                        }
                    }
                }
                (d, sums)
            })
            .collect();
        n_done = 2 * block - 1;
        let mut all_small = true;
        for k in 0..fs.len() {
            let avgs: Vec<f64> = results.iter().map(|(_, s)| s[k] / block as f64).collect();
            let hi = avgs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = avgs.iter().copied().fold(f64::INFINITY, f64::min);
            let osc = hi - lo;
            osc_history[k].push((block, osc));
            if osc >= TRIVIALITY_TOL {
                all_small = false;
            }
        }
        dists = results.into_iter().map(|(d, _)| d).collect();
        if all_small {
            verdict = Some(Triviality::Trivial);
            break;
        }
        block *= 2;
    }

    let verdict = verdict.unwrap_or_else(|| {
        // still shrinking by half per doubling: undecided rather than nontrivial
        let shrinking = osc_history.iter().all(|h| match h.as_slice() {
            [.., (_, a), (_, b)] => *b <= 0.5 * *a || *b < TRIVIALITY_TOL,
            _ => false,
        });
        if shrinking {
            Triviality::Undecided
        } else {
            Triviality::NontrivialEvidence
        }
    });

    // the constant function is fixed by P exactly; report the defect of it
    let mut defect: f64 = 0.0;
    for x in &labels {
        let row_sum: f64 = walk.transition_row(x)?.values().sum();
        defect = defect.max((row_sum - 1.0).abs());
    }

    Ok(BoundaryReport {
        harmonic: labels.iter().map(|x| (x.clone(), 1.0)).collect(),
        harmonicity_defect: defect,
        history: osc_history
            .iter()
            .map(|h| h.last().map_or(f64::NAN, |(_, o)| *o))
            .collect(),
        converged: verdict == Triviality::Trivial,
        verdict: Some(verdict),
        period: walk.period(),
        test_functions: fs
            .iter()
            .zip(osc_history)
            .map(|(tf, oscillation)| TestFunctionResult {
                name: tf.name.clone(),
                oscillation,
            })
            .collect(),
    })
}
