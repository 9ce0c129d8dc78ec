//! Independent routes to the Green kernel, used to cross-check the series.
//!
//! * [`windowed_green`] solves `(I − P_W) G = I` on a finite window with the
//!   walk killed on leaving it;
//! * [`monte_carlo_green`] counts visits along simulated paths.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::PotentialError;
use crate::fusion::Label;
use crate::walk::CentralWalk;

/// `G_W(x, y)` for all `x, y` in `window`, where the walk is killed as soon
/// as it leaves the window. Row and column order follow `window`.
pub fn windowed_green(
    walk: &CentralWalk,
    window: &[Label],
) -> Result<DMatrix<f64>, PotentialError> {
    let n = window.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (i, x) in window.iter().enumerate() {
        let row = walk.transition_row(x)?;
        for (j, y) in window.iter().enumerate() {
            if let Some(p) = row.get(y) {
                a[(i, j)] -= p;
            }
        }
    }
    a.try_inverse().ok_or_else(|| {
        PotentialError::InvalidInput("I − P is singular on the window (no escape)".into())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McConfig {
    pub paths: usize,
    /// Path length cap.
    pub max_steps: usize,
    /// Paths are stopped once the label height exceeds this.
    pub kill_height: Option<u64>,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            paths: 1_000_000,
            max_steps: 10_000,
            kill_height: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

const CHUNK: usize = 4096;

struct Sampler {
    // per state: (targets, cumulative probabilities, height)
    rows: Vec<Option<(Vec<usize>, Vec<f64>, u64)>>,
}

impl Sampler {
    fn entry(&mut self, walk: &CentralWalk, i: usize) -> &(Vec<usize>, Vec<f64>, u64) {
        if i >= self.rows.len() {
            self.rows.resize(i + 1, None);
        }
        if self.rows[i].is_none() {
            // label order, so draws do not depend on interning history
            let mut row: Vec<(usize, f64)> = walk.row(i).to_vec();
            row.sort_by_cached_key(|(j, _)| walk.label_of(*j));
            let mut acc = 0.0;
            let cum = row
                .iter()
                .map(|(_, p)| {
                    acc += p;
                    acc
                })
                .collect();
            let height = walk.ring().height(&walk.label_of(i));
            self.rows[i] = Some((row.iter().map(|(j, _)| *j).collect(), cum, height));
        }
        self.rows[i].as_ref().unwrap()
    }
}

/// Mean number of visits to each `y` (time zero included) over `paths`
/// simulated paths from `x`, with standard errors.
///
/// Paths are split into fixed chunks, each with its own ChaCha stream, so
/// the result depends only on the seed and not on the thread count.
pub fn monte_carlo_green(
    walk: &CentralWalk,
    x: &Label,
    ys: &[Label],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>, PotentialError> {
    if cfg.paths == 0 {
        return Err(PotentialError::InvalidInput("no Monte-Carlo paths".into()));
    }
    let start = walk.state_id(x)?;
    let targets = ys
        .iter()
        .map(|y| walk.state_id(y))
        .collect::<Result<Vec<_>, _>>()?;
    // slots[state] lists the positions of `state` in `ys`
    let mut slots: Vec<Vec<usize>> = Vec::new();
    for (k, &t) in targets.iter().enumerate() {
        if t >= slots.len() {
            slots.resize(t + 1, Vec::new());
        }
        slots[t].push(k);
    }
    let chunks = cfg.paths.div_ceil(CHUNK);

    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c as u64);
            let mut sampler = Sampler { rows: Vec::new() };
            let mut sum = vec![0.0; targets.len()];
            let mut sum_sq = vec![0.0; targets.len()];
            let mut visits = vec![0u64; targets.len()];
            let n_paths = CHUNK.min(cfg.paths - c * CHUNK);
            for _ in 0..n_paths {
                visits.iter_mut().for_each(|v| *v = 0);
                let mut state = start;
                for step in 0..=cfg.max_steps {
                    if let Some(ks) = slots.get(state) {
                        for &k in ks {
                            visits[k] += 1;
                        }
                    }
                    if step == cfg.max_steps {
                        break;
                    }
                    let (next, cum, height) = sampler.entry(walk, state);
                    if cfg.kill_height.is_some_and(|h| *height > h) {
                        break;
                    }
                    let u: f64 = rng.random::<f64>() * cum[cum.len() - 1];
                    let k = cum.partition_point(|&c| c <= u).min(next.len() - 1);
                    state = next[k];
                }
                for (k, &v) in visits.iter().enumerate() {
                    let v = v as f64;
                    sum[k] += v;
                    sum_sq[k] += v * v;
                }
            }
            (sum, sum_sq)
        })
        .reduce(
            || (vec![0.0; targets.len()], vec![0.0; targets.len()]),
            |(mut a, mut b), (c, d)| {
                a.iter_mut().zip(&c).for_each(|(x, y)| *x += y);
                b.iter_mut().zip(&d).for_each(|(x, y)| *x += y);
                (a, b)
            },
        );

    let n = cfg.paths as f64;
    Ok(sum
        .iter()
        .zip(&sum_sq)
        .map(|(&s, &s2)| {
            let mean = s / n;
            let var = ((s2 / n) - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
            McEstimate {
                mean,
                std_err: (var / n).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{FusionRing, ProbMeasure};
    use crate::potential::{green, GreenOptions};

    fn l(n: u32) -> Label {
        Label::Index(n)
    }

    #[test]
    fn window_solve_matches_series() {
        let w = CentralWalk::new(FusionRing::su2(2.5).unwrap(), ProbMeasure::point(l(1))).unwrap();
        let window: Vec<Label> = (0..=120).map(l).collect();
        let g = windowed_green(&w, &window).unwrap();
        for x in 0..5 {
            for y in 0..5 {
                let s = green(&w, &l(x), &l(y), &GreenOptions::default()).unwrap().value;
                assert!((g[(x as usize, y as usize)] - s).abs() < 1e-9 * s);
            }
        }
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let w = CentralWalk::new(FusionRing::su2(2.5).unwrap(), ProbMeasure::point(l(1))).unwrap();
        let cfg = McConfig {
            paths: 20_000,
            max_steps: 2_000,
            kill_height: Some(60),
            seed: 7,
        };
        let a = monte_carlo_green(&w, &l(0), &[l(0), l(1)], &cfg).unwrap();
        let b = monte_carlo_green(&w, &l(0), &[l(0), l(1)], &cfg).unwrap();
        assert_eq!(a, b);
        let g = green(&w, &l(0), &l(0), &GreenOptions::default()).unwrap().value;
        assert!((a[0].mean - g).abs() < 5.0 * a[0].std_err);
        // from 0 the first step always lands on 1
        assert!(a[1].mean >= 1.0);
    }

    #[test]
    fn monte_carlo_ignores_cache_history() {
        let make = || CentralWalk::new(FusionRing::su2(2.2).unwrap(), ProbMeasure::point(l(1))).unwrap();
        let cfg = McConfig {
            paths: 5_000,
            max_steps: 500,
            kill_height: Some(30),
            seed: 3,
        };
        let fresh = make();
        let warmed = make();
        windowed_green(&warmed, &(0..=40).rev().map(l).collect::<Vec<_>>()).unwrap();
        let ys = [l(0), l(4), l(7)];
        assert_eq!(
            monte_carlo_green(&fresh, &l(5), &ys, &cfg).unwrap(),
            monte_carlo_green(&warmed, &l(5), &ys, &cfg).unwrap()
        );
    }
}
