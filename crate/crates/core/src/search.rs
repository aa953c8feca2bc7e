//! Sequential per-antenna grid update shared by the nulling and multi-beam
//! solvers and the antenna-selection baseline.
//!
//! Antennas are labelled: index `n` always refers to the same physical
//! element even if it hops past a neighbour on the grid. Positions are kept
//! as grid indices so objectives can use precomputed per-point tables.

use crate::error::{Error, Result};
use crate::geometry::ArrayLimits;

/// Candidate coordinates on the track.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    points: Vec<f64>,
}

impl SamplingGrid {
    /// `M + 1` points `i·D_max/M`, `i = 0..=M`.
    pub fn uniform(d_max: f64, samples: usize) -> Self {
        let points = (0..=samples)
            .map(|i| i as f64 * d_max / samples as f64)
            .collect();
        Self { points }
    }

    /// Points `i·pitch` that fit on `[0, d_max]`.
    pub fn with_pitch(d_max: f64, pitch: f64) -> Self {
        let count = (d_max / pitch * (1.0 + 1e-12)).floor() as usize;
        Self {
            points: (0..=count).map(|i| i as f64 * pitch).collect(),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coords(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.points[i]).collect()
    }

    /// Uniform layout with spacing `D_max/(N−1)` from 0, snapped to the grid.
    pub fn uniform_start(&self, n: usize, limits: &ArrayLimits) -> Result<Vec<usize>> {
        let m = self.points.len() - 1;
        if n == 1 {
            return Ok(vec![0]);
        }
        if m < n - 1 {
            return Err(Error::Infeasible(format!(
                "grid of {} points cannot hold {n} antennas",
                m + 1
            )));
        }
        let snapped: Vec<usize> = (0..n)
            .map(|i| ((i * m) as f64 / (n - 1) as f64).round() as usize)
            .collect();
        if self.spacing_ok(&snapped, limits) {
            return Ok(snapped);
        }
        // rounding ate into d_min: pack from the left instead
        let step = self.points[1] - self.points[0];
        let stride = (limits.spacing_threshold() / step).ceil().max(1.0) as usize;
        let packed: Vec<usize> = (0..n).map(|i| i * stride).collect();
        if packed[n - 1] <= m && self.spacing_ok(&packed, limits) {
            Ok(packed)
        } else {
            Err(Error::Infeasible(format!(
                "{n} antennas do not fit on the sampling grid with d_min = {}",
                limits.d_min()
            )))
        }
    }

    fn spacing_ok(&self, idx: &[usize], limits: &ArrayLimits) -> bool {
        limits.spacing_ok(&self.coords(idx))
    }

    /// Grid indices at least `d_min` away from every antenna except `n`.
    pub fn feasible_indices(
        &self,
        current: &[usize],
        n: usize,
        limits: &ArrayLimits,
    ) -> Vec<usize> {
        let thr = limits.spacing_threshold();
        (0..self.points.len())
            .filter(|&s| {
                let p = self.points[s];
                current
                    .iter()
                    .enumerate()
                    .all(|(j, &c)| j == n || (p - self.points[c]).abs() >= thr)
            })
            .collect()
    }
}

/// Objective evaluated by the sequential update.
pub(crate) trait SequentialObjective {
    /// Objective of the full layout.
    fn value(&self, idx: &[usize]) -> f64;
    /// Caches everything that does not depend on antenna `n`.
    fn prepare(&mut self, idx: &[usize], n: usize);
    /// Objective after moving antenna `n` to grid point `s`.
    fn candidate(&self, s: usize) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct SearchOutcome {
    pub idx: Vec<usize>,
    /// Objective at the start, then after every single-antenna update.
    pub trace: Vec<f64>,
    pub rounds: usize,
}

pub(crate) fn sequential_update<O: SequentialObjective>(
    grid: &SamplingGrid,
    start: Vec<usize>,
    limits: &ArrayLimits,
    rounds: usize,
    objective: &mut O,
) -> Result<SearchOutcome> {
    let mut idx = start;
    let mut trace = vec![objective.value(&idx)];
    let mut done = 0;
    for _ in 0..rounds {
        done += 1;
        let mut changed = false;
        for n in 0..idx.len() {
            let feasible = grid.feasible_indices(&idx, n, limits);
            if feasible.is_empty() {
                return Err(Error::EmptyFeasibleSet { antenna: n });
            }
            objective.prepare(&idx, n);
            let mut best: Option<(usize, f64)> = None;
            for &s in &feasible {
                let v = objective.candidate(s);
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((s, v));
                }
            }
            let (s, v) = best.expect("feasible set is non-empty");
            if v == f64::NEG_INFINITY {
                // every candidate undefined: stay put
                trace.push(*trace.last().unwrap());
                continue;
            }
            if s != idx[n] {
                idx[n] = s;
                changed = true;
            }
            trace.push(v);
        }
        if !changed {
            break;
        }
    }
    Ok(SearchOutcome {
        idx,
        trace,
        rounds: done,
    })
}

/// Sorting permutation of labelled coordinates (ascending).
pub(crate) fn sort_permutation(coords: &[f64]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..coords.len()).collect();
    perm.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let g = SamplingGrid::uniform(0.54, 900);
        assert_eq!(g.len(), 901);
        assert_eq!(g.points()[900], 0.54);
        let g = SamplingGrid::with_pitch(0.54, 0.03);
        assert_eq!(g.len(), 19);
    }

    #[test]
    fn uniform_start_is_feasible() {
        let limits = ArrayLimits::new(0.54, 0.03, 0.06).unwrap();
        let g = SamplingGrid::uniform(0.54, 900);
        let idx = g.uniform_start(6, &limits).unwrap();
        assert_eq!(idx, vec![0, 180, 360, 540, 720, 900]);
        let g = SamplingGrid::with_pitch(0.54, 0.03);
        let idx = g.uniform_start(19, &limits).unwrap();
        assert_eq!(idx, (0..19).collect::<Vec<_>>());
    }

    #[test]
    fn feasible_set_single_antenna_is_whole_grid() {
        let limits = ArrayLimits::new(1.0, 0.5, 0.06).unwrap();
        let g = SamplingGrid::uniform(1.0, 4);
        assert_eq!(g.feasible_indices(&[2], 0, &limits), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn feasible_set_midpoint_only() {
        let limits = ArrayLimits::new(1.0, 0.5, 0.06).unwrap();
        let g = SamplingGrid::uniform(1.0, 4);
        // antennas at 0 and D_max, the middle one is being moved
        assert_eq!(g.feasible_indices(&[0, 1, 4], 1, &limits), vec![2]);
    }

    struct Quadratic(usize, f64);
    impl SequentialObjective for Quadratic {
        fn value(&self, idx: &[usize]) -> f64 {
            -idx.iter().map(|&i| (i as f64 - 5.0).powi(2)).sum::<f64>()
        }
        fn prepare(&mut self, idx: &[usize], n: usize) {
            self.0 = n;
            let rest: f64 = idx
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != n)
                .map(|(_, &i)| (i as f64 - 5.0).powi(2))
                .sum();
            self.1 = rest;
        }
        fn candidate(&self, s: usize) -> f64 {
            -(self.1 + (s as f64 - 5.0).powi(2))
        }
    }

    #[test]
    fn update_is_monotone_and_deterministic() {
        let limits = ArrayLimits::new(1.0, 0.2, 0.06).unwrap();
        let g = SamplingGrid::uniform(1.0, 10);
        let run = || {
            let mut obj = Quadratic(0, 0.0);
            sequential_update(&g, vec![0, 10], &limits, 10, &mut obj).unwrap()
        };
        let a = run();
        assert!(a.trace.windows(2).all(|w| w[1] >= w[0]));
        // first antenna takes the peak, second settles 2 steps away (smaller side wins ties)
        assert_eq!(a.idx, vec![5, 3]);
        assert_eq!(a.idx, run().idx);
    }
}
