//! Gain maps over the half plane in front of the track.

use mabeam::geometry::{gain, steering_vector};
use mabeam::{DistanceModel, PolarTarget};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::run::RunRecord;

/// Evaluation grid. Rows follow `y` (or `R`), columns follow `x` (or `θ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HeatmapGrid {
    Cartesian {
        x: [f64; 2],
        y: [f64; 2],
        nx: usize,
        ny: usize,
    },
    Polar {
        distance: [f64; 2],
        angle: [f64; 2],
        n_distance: usize,
        n_angle: usize,
    },
}

impl Default for HeatmapGrid {
    fn default() -> Self {
        HeatmapGrid::Cartesian {
            x: [-10.0, 10.0],
            y: [0.0, 10.0],
            nx: 200,
            ny: 100,
        }
    }
}

impl HeatmapGrid {
    pub fn validate(&self) -> Result<()> {
        let (a, b, n, m) = match *self {
            HeatmapGrid::Cartesian { x, y, nx, ny } => {
                if y[0] < 0.0 {
                    return Err(HarnessError::Config("heatmap y must be >= 0".into()));
                }
                (x, y, nx, ny)
            }
            HeatmapGrid::Polar {
                distance,
                angle,
                n_distance,
                n_angle,
            } => {
                if distance[0] <= 0.0 || angle[0] < 0.0 || angle[1] > std::f64::consts::PI {
                    return Err(HarnessError::Config(
                        "heatmap needs R > 0 and angles within [0, pi]".into(),
                    ));
                }
                (angle, distance, n_angle, n_distance)
            }
        };
        if n == 0 || m == 0 {
            return Err(HarnessError::Config(
                "heatmap resolution must be positive".into(),
            ));
        }
        if [a, b]
            .iter()
            .any(|r| !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]))
        {
            return Err(HarnessError::Config(
                "heatmap ranges must be finite and ordered".into(),
            ));
        }
        Ok(())
    }

    /// `(column axis, row axis)`.
    pub fn axes(&self) -> (Vec<f64>, Vec<f64>) {
        match *self {
            HeatmapGrid::Cartesian { x, y, nx, ny } => (linspace(x, nx), linspace(y, ny)),
            HeatmapGrid::Polar {
                distance,
                angle,
                n_distance,
                n_angle,
            } => (linspace(angle, n_angle), linspace(distance, n_distance)),
        }
    }

    pub fn is_polar(&self) -> bool {
        matches!(self, HeatmapGrid::Polar { .. })
    }

    fn point(&self, col: f64, row: f64) -> Option<PolarTarget> {
        match self {
            HeatmapGrid::Cartesian { .. } => PolarTarget::from_cartesian(col, row).ok(),
            HeatmapGrid::Polar { .. } => PolarTarget::new(row, col).ok(),
        }
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace([lo, hi]: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub polar: bool,
    /// `x` in meters or `θ` in radians.
    pub cols: Vec<f64>,
    /// `y` or `R` in meters.
    pub rows: Vec<f64>,
    /// `gains[row][col]`; NaN where the point is the track origin.
    pub gains: Vec<Vec<f64>>,
}

impl Heatmap {
    /// Largest value and its `(row, col)` index.
    pub fn max(&self) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, row) in self.gains.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                if !g.is_nan() && best.is_none_or(|b| g > b.0) {
                    best = Some((g, i, j));
                }
            }
        }
        best
    }
}

/// Near-field gain of the solved beam at every grid point.
pub fn heatmap(record: &RunRecord, wavelength: f64, grid: &HeatmapGrid) -> Result<Heatmap> {
    grid.validate()?;
    let (cols, rows) = grid.axes();
    let gains = rows
        .iter()
        .map(|&r| {
            cols.iter()
                .map(|&c| match grid.point(c, r) {
                    Some(t) => gain(
                        &record.weights,
                        &steering_vector(&record.apv, &t, wavelength, DistanceModel::Approx),
                    ),
                    None => f64::NAN,
                })
                .collect()
        })
        .collect();
    Ok(Heatmap {
        polar: grid.is_polar(),
        cols,
        rows,
        gains,
    })
}
