//! Run configuration: sectioned TOML with a canonical form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use pevol_core::coefficients::{CoefficientModel, Family, SearchSpec};
use pevol_core::lab::{ExperimentPlan, Sampling, A_S_FROZEN};
use pevol_core::solver::{IntegratingFactor, SolverConfig};
use pevol_core::symbols::{Exponents, Regime};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckCondition,
    Lemma1,
    Solve,
    Dichotomy,
    CalculusTests,
}

impl Command {
    pub const ALL: [Command; 5] =
        [Self::CheckCondition, Self::Lemma1, Self::Solve, Self::Dichotomy, Self::CalculusTests];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CheckCondition => "check-condition",
            Self::Lemma1 => "lemma1",
            Self::Solve => "solve",
            Self::Dichotomy => "dichotomy",
            Self::CalculusTests => "calculus-tests",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| LabError::Config(format!("unknown command `{s}`")))
    }
}

/// A coefficient family with its parameters, tagged by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Zero,
    ConstantImag { c: f64 },
    DecayingImag { amplitude: f64, exponent: f64, center: f64 },
    LeviFamily { constant: f64 },
    CustomTable { x0: f64, dx: f64, values: Vec<f64> },
}

impl FamilySpec {
    pub fn family(&self) -> Family {
        match self {
            Self::Zero => Family::Zero,
            Self::ConstantImag { c } => Family::ConstantImag { c: *c },
            Self::DecayingImag { amplitude, exponent, center } => {
                Family::DecayingImag { amplitude: *amplitude, exponent: *exponent, center: *center }
            }
            Self::LeviFamily { constant } => Family::Levi { constant: *constant },
            Self::CustomTable { x0, dx, values } => Family::CustomTable { x0: *x0, dx: *dx, values: values.clone() },
        }
    }

    pub fn name(&self) -> &'static str {
        self.family().name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub command: Command,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub p: u32,
    pub t_max: f64,
    pub a_p: f64,
    pub m_target: f64,
    pub ks: Vec<u32>,
    pub radii: Vec<f64>,
    pub qs: Vec<u32>,
    /// Reference exponents.
    pub a: f64,
    pub mu: f64,
    /// Exponents of the solves.
    pub a_eff: f64,
    pub mu_eff: f64,
    /// `substituted` or `paper`.
    pub regime: String,
    pub s_cap: usize,
    pub a_s: f64,
    pub uniform_checkpoints: usize,
    pub geometric_checkpoints: usize,
    /// Points per unit of `rho (x - center)` for the localized norms; 0 uses
    /// the grid nodes.
    pub sampling_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_length: f64,
    /// Fixed node count for `solve`; 0 sizes the grid from the packet.
    pub n: usize,
    pub guard: f64,
    pub oversampling: f64,
    pub max_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSection {
    pub rho_grid: Vec<f64>,
    pub x_window: f64,
    pub x_step: f64,
    pub triangle_nodes: usize,
    pub growth_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    /// `full-constant` or `principal`.
    pub integrating_factor: String,
    pub c_step: f64,
    /// Step cap; 0 leaves the step to the stability rule.
    pub dt: f64,
    pub wrap_threshold: f64,
    pub packet_frequency: f64,
    pub packet_center: f64,
    pub t_end: f64,
    pub checkpoints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalculusSection {
    pub grid_n: usize,
    pub half_length: f64,
    pub probes: usize,
    pub band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub family: FamilySpec,
    /// Second family for `dichotomy`; its summary is compared with the first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<FamilySpec>,
    pub plan: PlanSection,
    pub grid: GridSection,
    pub condition: ConditionSection,
    pub solve: SolveSection,
    pub calculus: CalculusSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let desk = ExperimentPlan::desk(Family::Zero);
        let solver = SolverConfig::default();
        let density = match desk.sampling {
            Sampling::Density(d) => d,
            Sampling::Grid => 0.0,
        };
        Self {
            run: RunSection { command: Command::Dichotomy, seed: 0 },
            family: FamilySpec::ConstantImag { c: 0.25 },
            contrast: Some(FamilySpec::DecayingImag { amplitude: 1.0, exponent: 2.0, center: 0.0 }),
            plan: PlanSection {
                p: desk.p,
                t_max: desk.t_max,
                a_p: desk.a_p,
                m_target: desk.m_target,
                ks: desk.ks.clone(),
                radii: desk.radii.clone(),
                qs: desk.qs.clone(),
                a: desk.paper_exponents.a,
                mu: desk.paper_exponents.mu,
                a_eff: desk.exponents.a,
                mu_eff: desk.exponents.mu,
                regime: "substituted".into(),
                s_cap: desk.s_cap,
                a_s: A_S_FROZEN,
                uniform_checkpoints: desk.uniform_checkpoints,
                geometric_checkpoints: desk.geometric_checkpoints,
                sampling_density: density,
            },
            grid: GridSection {
                half_length: desk.half_length,
                n: 0,
                guard: solver.guard,
                oversampling: desk.oversampling,
                max_grid: desk.max_grid,
            },
            condition: ConditionSection {
                rho_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
                x_window: 100.0,
                x_step: 0.25,
                triangle_nodes: 33,
                growth_threshold: 0.5,
            },
            solve: SolveSection {
                integrating_factor: "full-constant".into(),
                c_step: solver.c_step,
                dt: 0.0,
                wrap_threshold: solver.wrap_threshold.unwrap_or(0.0),
                packet_frequency: 64.0,
                packet_center: -100.0,
                t_end: 0.1,
                checkpoints: 4,
            },
            calculus: CalculusSection { grid_n: 256, half_length: 16.0, probes: 30, band: 0.5 },
        }
    }
}

impl RunConfig {
    /// Parses and validates; errors carry the line and key from the parser.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex sha256 of the canonical form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.plan_for(&self.family)?.validate()?;
        if let Some(c) = &self.contrast {
            self.plan_for(c)?.validate()?;
        }
        self.solver()?.validate()?;
        let c = &self.condition;
        if c.rho_grid.is_empty() || c.rho_grid.iter().any(|r| !(*r > 0.0)) || c.rho_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Config("condition.rho_grid must be positive and increasing".into()));
        }
        if !(c.x_window > 0.0 && c.x_step > 0.0 && c.triangle_nodes >= 2) {
            return Err(LabError::Config("condition window, step and triangle nodes must be positive".into()));
        }
        let s = &self.solve;
        if !(s.t_end >= 0.0 && s.t_end <= self.plan.t_max) || s.checkpoints == 0 {
            return Err(LabError::Config("solve.t_end must lie in [0, T] with at least one checkpoint".into()));
        }
        if self.grid.n != 0 && !self.grid.n.is_power_of_two() {
            return Err(LabError::Config(format!("grid.n = {} is not a power of two", self.grid.n)));
        }
        let k = &self.calculus;
        if !k.grid_n.is_power_of_two() || k.probes == 0 || !(k.band > 0.0 && k.band < 0.9) {
            return Err(LabError::Config("calculus grid must be a power of two with probes and a band in (0, 0.9)".into()));
        }
        Ok(())
    }

    pub fn regime(&self) -> Result<Regime> {
        match self.plan.regime.as_str() {
            "substituted" => Ok(Regime::Substituted),
            "paper" => Ok(Regime::Paper),
            other => Err(LabError::Config(format!("plan.regime `{other}` is neither `substituted` nor `paper`"))),
        }
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let s = &self.solve;
        let integrating_factor = match s.integrating_factor.as_str() {
            "full-constant" => IntegratingFactor::FullConstant,
            "principal" => IntegratingFactor::Principal,
            other => {
                return Err(LabError::Config(format!(
                    "solve.integrating_factor `{other}` is neither `full-constant` nor `principal`"
                )))
            }
        };
        Ok(SolverConfig {
            dt: (s.dt > 0.0).then_some(s.dt),
            c_step: s.c_step,
            integrating_factor,
            guard: self.grid.guard,
            wrap_threshold: (s.wrap_threshold > 0.0).then_some(s.wrap_threshold),
            ..SolverConfig::default()
        })
    }

    pub fn plan_for(&self, family: &FamilySpec) -> Result<ExperimentPlan> {
        let p = &self.plan;
        Ok(ExperimentPlan {
            family: family.family(),
            p: p.p,
            t_max: p.t_max,
            a_p: p.a_p,
            m_target: p.m_target,
            ks: p.ks.clone(),
            radii: p.radii.clone(),
            qs: p.qs.clone(),
            exponents: Exponents { a: p.a_eff, mu: p.mu_eff },
            regime: self.regime()?,
            paper_exponents: Exponents { a: p.a, mu: p.mu },
            s_cap: p.s_cap,
            half_length: self.grid.half_length,
            oversampling: self.grid.oversampling,
            max_grid: self.grid.max_grid,
            a_s: p.a_s,
            uniform_checkpoints: p.uniform_checkpoints,
            geometric_checkpoints: p.geometric_checkpoints,
            sampling: if p.sampling_density > 0.0 { Sampling::Density(p.sampling_density) } else { Sampling::Grid },
            solver: self.solver()?,
        })
    }

    pub fn model(&self) -> Result<CoefficientModel> {
        Ok(self.family.family().model(self.plan.p, self.plan.t_max, self.plan.a_p)?)
    }

    pub fn search(&self) -> SearchSpec {
        let c = &self.condition;
        SearchSpec {
            x_window: c.x_window,
            x_step: c.x_step,
            triangle_nodes: c.triangle_nodes,
            growth_threshold: c.growth_threshold,
            ..SearchSpec::default()
        }
    }
}
