//! Run configuration: a TOML file whose keys carry their units.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use phcomm_core::chem::{ChannelParams, Species};
use phcomm_core::fdm::{self, Advection, Grid1D, SolverConfig, Splitting, TransportIntegrator};
use phcomm_core::scenarios::{ConsecutiveMode, Emission, IsiThresholds, Scenario, ScenarioJob, DEFAULT_INJECTION_SIGMA};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub d_h_cm2_per_s: f64,
    pub d_oh_cm2_per_s: f64,
    pub k_f_per_molar_s: f64,
    pub k_r_molar_per_s: f64,
    pub k_w_molar2: f64,
    pub velocity_cm_per_s: f64,
    pub cross_section_cm2: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let p = ChannelParams::default();
        Self {
            d_h_cm2_per_s: p.d_h,
            d_oh_cm2_per_s: p.d_oh,
            k_f_per_molar_s: p.k_f,
            k_r_molar_per_s: p.k_r,
            k_w_molar2: p.k_w,
            velocity_cm_per_s: p.velocity,
            cross_section_cm2: p.cross_section,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub x_min_cm: f64,
    pub x_max_cm: f64,
    pub dx_cm: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            x_min_cm: -0.3,
            x_max_cm: 0.5,
            dx_cm: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Lie,
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdvectionName {
    Central,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorName {
    Euler,
    SspRk2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryName {
    DirichletBackground,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    TwoStage,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Omitted: 90% of the largest stable step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    pub t_end_s: f64,
    pub receiver_cm: f64,
    pub record_every: usize,
    pub scheme: SchemeName,
    pub advection: AdvectionName,
    pub integrator: IntegratorName,
    pub boundary: BoundaryName,
    pub consecutive_mode: ModeName,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt_s: None,
            t_end_s: 200.0,
            receiver_cm: 0.09,
            record_every: 20,
            scheme: SchemeName::Strang,
            advection: AdvectionName::Central,
            integrator: IntegratorName::Euler,
            boundary: BoundaryName::DirichletBackground,
            consecutive_mode: ModeName::TwoStage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub width_fraction: f64,
    pub baseline_band: f64,
    pub min_peak_factor: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let t = IsiThresholds::default();
        Self {
            width_fraction: t.width_fraction,
            baseline_band: t.baseline_band,
            min_peak_factor: t.min_peak_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Solver against the closed-form receiver series.
    pub closed_form: bool,
    /// Solver with recombination against the same solver without it.
    pub no_reaction: bool,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            closed_form: true,
            no_reaction: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeciesName {
    Acid,
    Base,
}

impl From<SpeciesName> for Species {
    fn from(s: SpeciesName) -> Self {
        match s {
            SpeciesName::Acid => Species::Acid,
            SpeciesName::Base => Species::Base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionSection {
    pub species: SpeciesName,
    pub moles: f64,
    #[serde(default)]
    pub release_time_s: f64,
    #[serde(default = "default_sigma")]
    pub injection_sigma_cm: f64,
    #[serde(default)]
    pub position_cm: f64,
}

fn default_sigma() -> f64 {
    DEFAULT_INJECTION_SIGMA
}

/// One scenario; every optional key overrides the global section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_cm_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consecutive_mode: Option<ModeName>,
    #[serde(default)]
    pub emission: Vec<EmissionSection>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub metrics: MetricsSection,
    pub compare: CompareSection,
    pub output: OutputSection,
    pub scenario: Vec<ScenarioSection>,
}

/// A scenario resolved into solver inputs.
#[derive(Debug, Clone)]
pub struct Job {
    pub job: ScenarioJob,
    pub stability: fdm::StabilityReport,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn thresholds(&self) -> IsiThresholds {
        IsiThresholds {
            width_fraction: self.metrics.width_fraction,
            baseline_band: self.metrics.baseline_band,
            min_peak_factor: self.metrics.min_peak_factor,
        }
    }

    fn params(&self, velocity: f64) -> ChannelParams {
        let c = &self.channel;
        ChannelParams {
            d_h: c.d_h_cm2_per_s,
            d_oh: c.d_oh_cm2_per_s,
            k_f: c.k_f_per_molar_s,
            k_r: c.k_r_molar_per_s,
            k_w: c.k_w_molar2,
            velocity,
            cross_section: c.cross_section_cm2,
            ..ChannelParams::default()
        }
    }

    /// Checks every scenario, including the stability bounds, and returns
    /// the solver inputs in file order.
    pub fn resolve(&self) -> Result<Vec<Job>, CliError> {
        if self.scenario.is_empty() {
            return Err(CliError::Config("no [[scenario]] entries".into()));
        }
        let m = &self.metrics;
        if !(m.width_fraction > 0.0 && m.width_fraction < 1.0) || !(m.baseline_band > 0.0 && m.baseline_band < 1.0) {
            return Err(CliError::Config(
                "metrics.width_fraction and metrics.baseline_band must lie in (0, 1)".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut jobs = Vec::with_capacity(self.scenario.len());
        for s in &self.scenario {
            if s.id.is_empty() || !s.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.+".contains(c)) {
                return Err(CliError::Config(format!(
                    "scenario id `{}` must be non-empty and use only letters, digits, '-', '_', '.', '+'",
                    s.id
                )));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(CliError::Config(format!("duplicate scenario id `{}`", s.id)));
            }
            jobs.push(self.resolve_one(s).map_err(|e| e.in_scenario(&s.id))?);
        }
        Ok(jobs)
    }

    fn resolve_one(&self, s: &ScenarioSection) -> Result<Job, CliError> {
        let params = self.params(s.velocity_cm_per_s.unwrap_or(self.channel.velocity_cm_per_s));
        params.validate()?;
        let grid = Grid1D::new(
            s.x_min_cm.unwrap_or(self.grid.x_min_cm),
            s.x_max_cm.unwrap_or(self.grid.x_max_cm),
            self.grid.dx_cm,
        )?;
        let sv = &self.solver;
        let mut config = SolverConfig::new(1.0, s.t_end_s.unwrap_or(sv.t_end_s), s.receiver_cm.unwrap_or(sv.receiver_cm))
            .with_record_every(sv.record_every)
            .with_scheme(match sv.scheme {
                SchemeName::Lie => Splitting::Lie,
                SchemeName::Strang => Splitting::Strang,
            })
            .with_advection(match sv.advection {
                AdvectionName::Central => Advection::Central,
                AdvectionName::Upwind => Advection::Upwind,
            })
            .with_integrator(match sv.integrator {
                IntegratorName::Euler => TransportIntegrator::ForwardEuler,
                IntegratorName::SspRk2 => TransportIntegrator::SspRk2,
            });
        config.dt = match sv.dt_s {
            Some(dt) => dt,
            None => fdm::DEFAULT_DT_SAFETY * fdm::max_stable_dt(&grid, &config, &params),
        };
        config.validate(&grid)?;
        let stability = fdm::stability_check(&grid, &config, &params)?;

        let emissions = s
            .emission
            .iter()
            .map(|e| {
                Emission::new(e.species.into(), e.moles)
                    .at(e.release_time_s)
                    .with_sigma(e.injection_sigma_cm)
                    .from_position(e.position_cm)
            })
            .collect();
        let mode = match s.consecutive_mode.unwrap_or(sv.consecutive_mode) {
            ModeName::TwoStage => ConsecutiveMode::TwoStage,
            ModeName::Continuous => ConsecutiveMode::Continuous,
        };
        let scenario = Scenario::new(s.id.clone(), emissions).with_mode(mode);
        scenario.validate()?;
        Ok(Job {
            job: ScenarioJob {
                scenario,
                grid,
                config,
                params,
            },
            stability,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUNDLED: [(&str, &str, usize); 4] = [
        ("acid_pulses", include_str!("../configs/acid_pulses.toml"), 6),
        ("base_pulses", include_str!("../configs/base_pulses.toml"), 6),
        ("acid_then_base", include_str!("../configs/acid_then_base.toml"), 2),
        ("base_then_acid", include_str!("../configs/base_then_acid.toml"), 2),
    ];

    #[test]
    fn bundled_configs_resolve() {
        for (name, text, count) in BUNDLED {
            let cfg = RunConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let jobs = cfg.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(jobs.len(), count, "{name}");
            for j in &jobs {
                assert!(j.stability.pass);
                assert!(j.job.config.t_end > 0.0);
            }
        }
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = RunConfig::parse("[[scenario]]\nid = \"a\"\n[[scenario.emission]]\nspecies = \"acid\"\nmoles = 0.001\n").unwrap();
        assert_eq!(cfg.channel, ChannelSection::default());
        assert_eq!(cfg.scenario[0].emission[0].injection_sigma_cm, 1e-3);
        let jobs = cfg.resolve().unwrap();
        let cfg0 = &jobs[0].job.config;
        assert!((jobs[0].stability.diffusion_number - 0.45).abs() < 1e-12);
        assert_eq!(cfg0.receiver_x, 0.09);
    }

    #[test]
    fn toml_round_trip_is_exact() {
        for (name, text, _) in BUNDLED {
            let cfg = RunConfig::parse(text).unwrap();
            let again = RunConfig::parse(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, again, "{name}");
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("[grid]\ndx = 1e-3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dx") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn empty_scenario_list_rejected() {
        let err = RunConfig::parse("").unwrap().resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overrides_apply_per_scenario() {
        let text = r#"
            [channel]
            velocity_cm_per_s = 0.0
            [[scenario]]
            id = "far"
            velocity_cm_per_s = 0.005
            receiver_cm = 0.2
            x_max_cm = 2.0
            t_end_s = 300.0
            [[scenario.emission]]
            species = "base"
            moles = 0.001
        "#;
        let jobs = RunConfig::parse(text).unwrap().resolve().unwrap();
        let j = &jobs[0].job;
        assert_eq!(j.params.velocity, 0.005);
        assert_eq!(j.config.receiver_x, 0.2);
        assert_eq!(j.config.t_end, 300.0);
        assert_eq!(j.grid.x_max, 2.0);
    }
}
