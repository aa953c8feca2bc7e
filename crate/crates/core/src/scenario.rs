//! A solved-for problem instance: array limits, users and the design goal.

use crate::error::{Error, Result};
use crate::geometry::{ArrayLimits, DistanceModel, PolarTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScenarioKind {
    /// Maximize the target gain while nulling every listed user.
    #[default]
    Nulling,
    /// Maximize the minimum gain over the target and every listed user.
    Multibeam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub limits: ArrayLimits,
    pub n_antennas: usize,
    pub target0: PolarTarget,
    pub users: Vec<PolarTarget>,
    pub kind: ScenarioKind,
    /// Distance model used while optimizing.
    pub model: DistanceModel,
}

impl Scenario {
    pub fn new(
        limits: ArrayLimits,
        n_antennas: usize,
        target0: PolarTarget,
        users: Vec<PolarTarget>,
        kind: ScenarioKind,
    ) -> Result<Self> {
        limits.check_count(n_antennas)?;
        if kind == ScenarioKind::Nulling && users.len() >= n_antennas {
            return Err(Error::InvalidInput(format!(
                "cannot null {} users with {} antennas",
                users.len(),
                n_antennas
            )));
        }
        Ok(Self {
            limits,
            n_antennas,
            target0,
            users,
            kind,
            model: DistanceModel::Approx,
        })
    }

    pub fn with_model(mut self, model: DistanceModel) -> Self {
        self.model = model;
        self
    }

    pub fn wavelength(&self) -> f64 {
        self.limits.wavelength()
    }

    /// Target first, then the listed users.
    pub fn all_targets(&self) -> Vec<PolarTarget> {
        std::iter::once(self.target0)
            .chain(self.users.iter().copied())
            .collect()
    }
}
