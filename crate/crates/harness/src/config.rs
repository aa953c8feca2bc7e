//! Scenario configuration read from a TOML file.
//!
//! Every field has a default, so an empty file describes the nulling example
//! with `λ = 0.06 m`, `N = 6`, `D_min = λ/2` and `D_max = 9λ`. Lengths accept a
//! number in meters or an arithmetic expression in `N`, `lambda` and `pi`, e.g.
//! `d_max = "1.5*N*lambda"`.

use std::f64::consts::PI;
use std::path::Path;

use mabeam::baselines::{BaselineConfig, BaselineKind, SwarmConfig};
use mabeam::construct::{AperturePolicy, RationalizeConfig};
use mabeam::multibeam_opt::ScaConfig;
use mabeam::nulling_opt::GridSearchConfig;
use mabeam::robustness::WorstCaseConfig;
use mabeam::{ArrayLimits, PolarTarget, Scenario, ScenarioKind};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::heatmap::HeatmapGrid;
use crate::montecarlo::DropDistribution;
use crate::run::Scheme;

/// Length in meters, literal or as an expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Meters(f64),
    Expr(String),
}

impl Length {
    pub fn eval(&self, n: usize, wavelength: f64) -> Result<f64> {
        let v = match self {
            Length::Meters(v) => *v,
            Length::Expr(s) => Expr::new(s, n, wavelength).parse()?,
        };
        if !v.is_finite() {
            return Err(HarnessError::Config(format!(
                "length {self:?} is not finite"
            )));
        }
        Ok(v)
    }
}

impl From<f64> for Length {
    fn from(v: f64) -> Self {
        Length::Meters(v)
    }
}

impl From<&str> for Length {
    fn from(s: &str) -> Self {
        Length::Expr(s.to_string())
    }
}

/// Recursive descent over `+ - * /`, unary minus and parentheses.
struct Expr<'a> {
    src: &'a str,
    pos: usize,
    n: f64,
    lambda: f64,
}

impl<'a> Expr<'a> {
    fn new(src: &'a str, n: usize, lambda: f64) -> Self {
        Self {
            src,
            pos: 0,
            n: n as f64,
            lambda,
        }
    }

    fn err(&self, what: &str) -> HarnessError {
        HarnessError::Config(format!(
            "expression {:?}: {what} at offset {}",
            self.src, self.pos
        ))
    }

    fn parse(mut self) -> Result<f64> {
        let v = self.sum()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(v)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<f64> {
        let mut v = self.product()?;
        loop {
            if self.eat('+') {
                v += self.product()?;
            } else if self.eat('-') {
                v -= self.product()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn product(&mut self) -> Result<f64> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                v *= self.unary()?;
            } else if self.eat('/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('(') {
            let v = self.sum()?;
            if !self.eat(')') {
                return Err(self.err("missing ')'"));
            }
            return Ok(v);
        }
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_alphanumeric() || c == '.' || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected a number or name"));
        }
        let token = &rest[..len];
        let v = match token {
            "N" => self.n,
            "lambda" => self.lambda,
            "pi" => PI,
            // signed exponents such as 1e-3 stop at the sign and fail here
            _ => token
                .parse::<f64>()
                .map_err(|_| self.err(&format!("unknown token {token:?}")))?,
        };
        self.pos += len;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub distance: f64,
    pub angle: f64,
}

impl TargetSpec {
    pub fn new(distance: f64, angle: f64) -> Self {
        Self { distance, angle }
    }

    pub fn resolve(&self) -> Result<PolarTarget> {
        Ok(PolarTarget::new(self.distance, self.angle)?)
    }
}

impl From<PolarTarget> for TargetSpec {
    fn from(t: PolarTarget) -> Self {
        Self::new(t.distance(), t.angle())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindSpec {
    #[default]
    Nulling,
    Multibeam,
}

impl From<KindSpec> for ScenarioKind {
    fn from(k: KindSpec) -> Self {
        match k {
            KindSpec::Nulling => ScenarioKind::Nulling,
            KindSpec::Multibeam => ScenarioKind::Multibeam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// `M`; ignored when `pitch` is set.
    pub samples: usize,
    pub pitch: Option<Length>,
    pub rounds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        let d = GridSearchConfig::default();
        Self {
            samples: d.samples,
            pitch: None,
            rounds: d.rounds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaSpec {
    pub tol_delta: f64,
    pub max_iters: usize,
    pub inner_kkt_tol: f64,
    pub ao_max_iters: usize,
}

impl Default for ScaSpec {
    fn default() -> Self {
        let d = ScaConfig::default();
        Self {
            tol_delta: d.tol_delta,
            max_iters: d.max_iters,
            inner_kkt_tol: d.inner_kkt_tol,
            ao_max_iters: mabeam::multibeam_opt::AO_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmSpec {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub init_velocity: f64,
}

impl Default for SwarmSpec {
    fn default() -> Self {
        let d = SwarmConfig::default();
        Self {
            particles: d.particles,
            iterations: d.iterations,
            inertia: d.inertia,
            cognitive: d.cognitive,
            social: d.social,
            init_velocity: d.init_velocity,
        }
    }
}

/// Where the robustness study takes its nominal layout from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutSource {
    /// Grid search, then null polishing for the nulling case.
    #[default]
    Proposed,
    /// Closed-form construction.
    Construct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustSpec {
    /// Error bounds in wavelengths.
    pub epsilon: Vec<f64>,
    pub draws: usize,
    pub vertex_refine_limit: usize,
    pub layout: LayoutSource,
}

impl Default for RobustSpec {
    fn default() -> Self {
        let d = WorstCaseConfig::default();
        Self {
            epsilon: vec![0.05, 0.10, 0.15],
            draws: d.draws,
            vertex_refine_limit: d.vertex_refine_limit,
            layout: LayoutSource::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructSpec {
    pub max_denominator: i64,
    pub tolerance: f64,
    /// Reject layouts that run past `D_max`.
    pub strict_aperture: bool,
}

impl Default for ConstructSpec {
    fn default() -> Self {
        let d = RationalizeConfig::default();
        Self {
            max_denominator: d.max_denominator,
            tolerance: d.tolerance,
            strict_aperture: false,
        }
    }
}

impl ConstructSpec {
    pub fn rationalize(&self) -> RationalizeConfig {
        RationalizeConfig {
            max_denominator: self.max_denominator,
            tolerance: self.tolerance,
        }
    }

    pub fn policy(&self) -> AperturePolicy {
        if self.strict_aperture {
            AperturePolicy::Strict
        } else {
            AperturePolicy::Relaxed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub trials: usize,
    /// Users dropped next to the target in each trial.
    pub users: usize,
    pub distance: [f64; 2],
    pub angle: [f64; 2],
    /// Degenerate drops tolerated per trial before giving up.
    pub max_redraws: usize,
    pub schemes: Vec<String>,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        let d = DropDistribution::default();
        Self {
            trials: d.trials,
            users: d.users,
            distance: d.distance,
            angle: d.angle,
            max_redraws: d.max_redraws,
            schemes: std::iter::once("proposed")
                .chain(BaselineKind::ALL.iter().map(|k| k.name()))
                .map(String::from)
                .collect(),
        }
    }
}

impl MonteCarloSpec {
    pub fn drops(&self) -> DropDistribution {
        DropDistribution {
            trials: self.trials,
            users: self.users,
            distance: self.distance,
            angle: self.angle,
            max_redraws: self.max_redraws,
        }
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        self.schemes.iter().map(|s| s.parse()).collect()
    }
}

/// One experiment, as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: KindSpec,
    pub seed: u64,
    pub wavelength: f64,
    pub n_antennas: usize,
    pub d_max: Length,
    pub d_min: Length,
    pub target0: TargetSpec,
    pub users: Vec<TargetSpec>,
    pub grid: GridSpec,
    pub sca: ScaSpec,
    pub swarm: SwarmSpec,
    pub robust: RobustSpec,
    pub construct: ConstructSpec,
    pub montecarlo: MonteCarloSpec,
    pub heatmap: HeatmapGrid,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: KindSpec::Nulling,
            seed: 0,
            wavelength: 0.06,
            n_antennas: 6,
            d_max: Length::from("9*lambda"),
            d_min: Length::from("lambda/2"),
            target0: TargetSpec::new(4.72, 1.01),
            users: vec![
                TargetSpec::new(6.32, 1.89),
                TargetSpec::new(5.0, 1.57),
                TargetSpec::new(5.0, 0.93),
            ],
            grid: GridSpec::default(),
            sca: ScaSpec::default(),
            swarm: SwarmSpec::default(),
            robust: RobustSpec::default(),
            construct: ConstructSpec::default(),
            montecarlo: MonteCarloSpec::default(),
            heatmap: HeatmapGrid::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn kind(&self) -> ScenarioKind {
        self.scenario.into()
    }

    pub fn limits(&self) -> Result<ArrayLimits> {
        let (n, lambda) = (self.n_antennas, self.wavelength);
        Ok(ArrayLimits::new(
            self.d_max.eval(n, lambda)?,
            self.d_min.eval(n, lambda)?,
            lambda,
        )?)
    }

    pub fn target0(&self) -> Result<PolarTarget> {
        self.target0.resolve()
    }

    pub fn users(&self) -> Result<Vec<PolarTarget>> {
        self.users.iter().map(TargetSpec::resolve).collect()
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario::new(
            self.limits()?,
            self.n_antennas,
            self.target0()?,
            self.users()?,
            self.kind(),
        )?)
    }

    /// Same configuration with new target and users.
    pub fn with_targets(&self, target0: PolarTarget, users: &[PolarTarget]) -> Self {
        Self {
            target0: target0.into(),
            users: users.iter().map(|&u| u.into()).collect(),
            ..self.clone()
        }
    }

    pub fn grid_config(&self) -> Result<GridSearchConfig> {
        let g = &self.grid;
        Ok(match &g.pitch {
            Some(p) => {
                let pitch = p.eval(self.n_antennas, self.wavelength)?;
                if pitch <= 0.0 {
                    return Err(HarnessError::Config(format!(
                        "grid pitch {pitch} must be positive"
                    )));
                }
                GridSearchConfig::with_pitch(self.limits()?.d_max(), pitch, g.rounds)
            }
            None => GridSearchConfig {
                samples: g.samples,
                rounds: g.rounds,
            },
        })
    }

    pub fn sca_config(&self) -> ScaConfig {
        ScaConfig {
            tol_delta: self.sca.tol_delta,
            max_iters: self.sca.max_iters,
            inner_kkt_tol: self.sca.inner_kkt_tol,
        }
    }

    pub fn swarm_config(&self) -> SwarmConfig {
        let s = &self.swarm;
        SwarmConfig {
            particles: s.particles,
            iterations: s.iterations,
            inertia: s.inertia,
            cognitive: s.cognitive,
            social: s.social,
            init_velocity: s.init_velocity,
            seed: self.seed,
        }
    }

    pub fn baseline_config(&self) -> Result<BaselineConfig> {
        Ok(BaselineConfig::new(
            self.grid_config()?,
            self.sca_config(),
            self.sca.ao_max_iters,
            self.swarm_config(),
        ))
    }

    pub fn worstcase_config(&self) -> WorstCaseConfig {
        WorstCaseConfig {
            draws: self.robust.draws,
            seed: self.seed,
            vertex_refine_limit: self.robust.vertex_refine_limit,
        }
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(HarnessError::Config(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        self.scenario()?;
        self.grid_config()?.validate(self.n_antennas)?;
        self.swarm_config().validate()?;
        self.montecarlo.drops().validate()?;
        self.montecarlo.schemes()?;
        self.heatmap.validate()?;
        if self
            .robust
            .epsilon
            .iter()
            .any(|e| !e.is_finite() || *e < 0.0)
        {
            return Err(HarnessError::Config(
                "robust.epsilon entries must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}
