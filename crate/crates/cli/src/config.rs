//! Experiment configuration: a TOML file whose keys are checked before any
//! compute starts. Every optional key is filled with its default during
//! [`ExperimentConfig::resolve`], so the manifest records the full setup.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mvmc_core::estimators::{Functional, Observable, SpatialWeight};
use mvmc_core::fvm::{Boundary, Equation, FluxKind, Integrator, Reconstruction, SchemeConfig, Solver};
use mvmc_core::random::{KelvinHelmholtzParams, RandomInitialData, ShockVortexParams};
use mvmc_core::relaxation::{Projection, RelaxationConfig};
use mvmc_core::{Field, Grid};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    BurgersRiemann,
    ShockVortex,
    KelvinHelmholtz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Mc,
    Mlmc,
    MlmcRelaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxName {
    Rusanov,
    Hllc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionName {
    None,
    Weno3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorName {
    SspRk2,
    SspRk3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryName {
    Periodic,
    Outflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionName {
    Average,
    Injection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceName {
    None,
    /// Exact Burgers solution (mean field and the `ε = 0` Dirac).
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub flux: Option<FluxName>,
    pub reconstruction: Option<ReconstructionName>,
    pub integrator: Option<IntegratorName>,
    pub cfl: Option<f64>,
    /// One entry per axis.
    pub boundary: Option<[BoundaryName; 2]>,
    pub weno_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSection {
    pub epsilon: Option<f64>,
    pub modes: Option<usize>,
    /// Shock-vortex strength.
    pub delta: Option<f64>,
    /// Shock-vortex decay.
    pub alpha: Option<f64>,
    /// Kelvin-Helmholtz unperturbed interface heights.
    pub interfaces: Option<[f64; 2]>,
    pub amplitude_range: Option<[f64; 2]>,
    pub phase_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableName {
    Identity,
    Square,
    Legendre,
}

/// One functional `⟨ψ, g(u)⟩`. `ψ` is the constant `weight`, or the
/// indicator of `region = [x0, x1, y0, y1]` scaled by `weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub observable: ObservableName,
    #[serde(default)]
    pub component: usize,
    pub order: Option<u32>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub weight: Option<f64>,
    pub region: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub final_time: f64,
    /// Cells per axis on level 0.
    pub base_cells: usize,
    /// Finest level `L`.
    pub levels: u32,
    pub mode: Option<Mode>,
    /// Sample count of a single-level run.
    pub mc_samples: Option<usize>,
    /// Explicit `M_0, …, M_L`.
    pub samples: Option<Vec<usize>>,
    pub tau: Option<f64>,
    pub probe_samples: Option<usize>,
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub relaxation_t0: Option<f64>,
    pub relaxation_projection: Option<ProjectionName>,
    pub reference: Option<ReferenceName>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub initial_data: InitialDataSection,
    #[serde(default)]
    pub functionals: Vec<FunctionalSpec>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub relaxation_t0: Option<f64>,
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    /// Applies overrides, fills every default and validates the result.
    pub fn resolve(mut self, over: &Overrides) -> Result<Self, Failure> {
        if let Some(seed) = over.seed {
            self.master_seed = Some(seed);
        }
        if let Some(w) = over.workers {
            self.workers = Some(w);
        }
        if let Some(dir) = &over.output_dir {
            self.output_dir = Some(dir.clone());
        }
        if let Some(t0) = over.relaxation_t0 {
            self.relaxation_t0 = Some(t0);
            self.mode = Some(Mode::MlmcRelaxed);
        }
        let burgers = self.experiment == Experiment::BurgersRiemann;
        self.mode.get_or_insert(Mode::Mlmc);
        self.probe_samples.get_or_insert(16);
        self.master_seed.get_or_insert(0);
        self.workers.get_or_insert(0);
        self.output_dir.get_or_insert_with(|| PathBuf::from("mvmc-out"));
        self.relaxation_t0.get_or_insert(RelaxationConfig::default().t0);
        self.relaxation_projection.get_or_insert(ProjectionName::Average);
        self.reference.get_or_insert(if burgers { ReferenceName::Analytic } else { ReferenceName::None });

        let s = &mut self.solver;
        let (flux, recon, integ, cfl, bc) = match self.experiment {
            Experiment::BurgersRiemann => {
                (FluxName::Rusanov, ReconstructionName::None, IntegratorName::SspRk2, 0.45, BoundaryName::Outflow)
            }
            Experiment::ShockVortex => {
                (FluxName::Hllc, ReconstructionName::Weno3, IntegratorName::SspRk3, 0.4, BoundaryName::Outflow)
            }
            Experiment::KelvinHelmholtz => {
                (FluxName::Hllc, ReconstructionName::Weno3, IntegratorName::SspRk3, 0.4, BoundaryName::Periodic)
            }
        };
        s.flux.get_or_insert(flux);
        s.reconstruction.get_or_insert(recon);
        s.integrator.get_or_insert(integ);
        s.cfl.get_or_insert(cfl);
        s.weno_eps.get_or_insert(1e-6);
        if s.boundary.is_none() {
            s.boundary = Some(if self.experiment == Experiment::ShockVortex {
                [BoundaryName::Outflow, BoundaryName::Periodic]
            } else {
                [bc; 2]
            });
        }

        let d = &mut self.initial_data;
        d.epsilon.get_or_insert(0.1);
        match self.experiment {
            Experiment::BurgersRiemann => {
                if d.modes.is_some()
                    || d.delta.is_some()
                    || d.alpha.is_some()
                    || d.interfaces.is_some()
                    || d.amplitude_range.is_some()
                    || d.phase_range.is_some()
                {
                    return Err(config_error("burgers-riemann initial data only takes epsilon"));
                }
            }
            Experiment::ShockVortex => {
                let p = ShockVortexParams::default();
                d.modes.get_or_insert(p.modes);
                d.delta.get_or_insert(p.delta);
                d.alpha.get_or_insert(p.alpha);
                d.amplitude_range.get_or_insert([p.amplitude_range.0, p.amplitude_range.1]);
                d.phase_range.get_or_insert([p.phase_range.0, p.phase_range.1]);
                if d.interfaces.is_some() {
                    return Err(config_error("shock-vortex initial data has no interfaces key"));
                }
            }
            Experiment::KelvinHelmholtz => {
                let p = KelvinHelmholtzParams::default();
                d.modes.get_or_insert(p.modes);
                d.interfaces.get_or_insert([p.interfaces.0, p.interfaces.1]);
                d.amplitude_range.get_or_insert([p.amplitude_range.0, p.amplitude_range.1]);
                d.phase_range.get_or_insert([0.0, 2.0 * PI]);
                if d.delta.is_some() || d.alpha.is_some() {
                    return Err(config_error("kelvin-helmholtz initial data has no delta or alpha"));
                }
            }
        }

        if self.functionals.is_empty() {
            self.functionals.push(FunctionalSpec {
                observable: ObservableName::Identity,
                component: 0,
                order: None,
                lower: None,
                upper: None,
                weight: None,
                region: None,
            });
        }
        for f in &mut self.functionals {
            f.weight.get_or_insert(1.0);
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), Failure> {
        if !(self.final_time >= 0.0) || !self.final_time.is_finite() {
            return Err(config_error("final_time must be a nonnegative number"));
        }
        if self.base_cells == 0 {
            return Err(config_error("base_cells must be positive"));
        }
        if self.levels > 16 {
            return Err(config_error("levels above 16 are not supported"));
        }
        if let Some(m) = self.mc_samples {
            if m == 0 {
                return Err(config_error("mc_samples must be positive"));
            }
        }
        if let Some(s) = &self.samples {
            if s.len() != self.levels as usize + 1 {
                return Err(config_error(format!("samples needs {} entries, got {}", self.levels + 1, s.len())));
            }
            if s.iter().any(|&m| m == 0) {
                return Err(config_error("every entry of samples must be positive"));
            }
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) {
                return Err(config_error("tau must be positive"));
            }
        }
        if self.probe_samples == Some(0) {
            return Err(config_error("probe_samples must be positive"));
        }
        self.relaxation()?;
        self.solver()?;
        self.initial_data()?;
        if self.reference == Some(ReferenceName::Analytic) && self.experiment != Experiment::BurgersRiemann {
            return Err(config_error("the analytic reference exists for burgers-riemann only"));
        }
        let ncomp = self.initial_data()?.equation().ncomp();
        for (k, f) in self.functionals.iter().enumerate() {
            if f.component >= ncomp {
                return Err(config_error(format!("functional {k}: component {} out of range", f.component)));
            }
            if f.observable == ObservableName::Legendre {
                let (Some(lo), Some(hi)) = (f.lower, f.upper) else {
                    return Err(config_error(format!("functional {k}: legendre needs lower and upper")));
                };
                if !(hi > lo) || f.order.is_none() {
                    return Err(config_error(format!("functional {k}: legendre needs order and lower < upper")));
                }
            } else if f.order.is_some() || f.lower.is_some() || f.upper.is_some() {
                return Err(config_error(format!("functional {k}: order/lower/upper belong to legendre")));
            }
            if let Some(r) = &f.region {
                let dim = self.initial_data()?.dim();
                if r.len() != 2 * dim || r.chunks(2).any(|p| !(p[1] > p[0])) {
                    return Err(config_error(format!("functional {k}: region needs {} increasing bounds", 2 * dim)));
                }
            }
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Mlmc)
    }

    pub fn seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("mvmc-out"))
    }

    pub fn workers(&self) -> mvmc_core::Workers {
        mvmc_core::Workers(self.workers.unwrap_or(0))
    }

    pub fn dim(&self) -> usize {
        if self.experiment == Experiment::BurgersRiemann {
            1
        } else {
            2
        }
    }

    pub fn base_grid(&self) -> Result<Grid, Failure> {
        Grid::unit(self.dim(), self.base_cells).map_err(|e| config_error(e.to_string()))
    }

    pub fn relaxation(&self) -> Result<RelaxationConfig, Failure> {
        let t0 = self.relaxation_t0.unwrap_or(RelaxationConfig::default().t0);
        let mut r = RelaxationConfig::new(t0).map_err(|e| config_error(e.to_string()))?;
        r.projection = match self.relaxation_projection.unwrap_or(ProjectionName::Average) {
            ProjectionName::Average => Projection::Average,
            ProjectionName::Injection => Projection::Injection,
        };
        Ok(r)
    }

    pub fn solver(&self) -> Result<Solver, Failure> {
        let s = &self.solver;
        let boundary = s.boundary.unwrap_or([BoundaryName::Outflow; 2]).map(|b| match b {
            BoundaryName::Periodic => Boundary::Periodic,
            BoundaryName::Outflow => Boundary::Outflow,
        });
        let scheme = SchemeConfig {
            flux: match s.flux.unwrap_or(FluxName::Rusanov) {
                FluxName::Rusanov => FluxKind::Rusanov,
                FluxName::Hllc => FluxKind::Hllc,
            },
            reconstruction: match s.reconstruction.unwrap_or(ReconstructionName::None) {
                ReconstructionName::None => Reconstruction::None,
                ReconstructionName::Weno3 => Reconstruction::Weno3,
            },
            integrator: match s.integrator.unwrap_or(IntegratorName::SspRk2) {
                IntegratorName::SspRk2 => Integrator::SspRk2,
                IntegratorName::SspRk3 => Integrator::SspRk3,
            },
            cfl: s.cfl.unwrap_or(0.45),
            boundary,
            weno_eps: s.weno_eps.unwrap_or(1e-6),
        };
        let equation = match self.experiment {
            Experiment::BurgersRiemann => Equation::Burgers,
            _ => Equation::euler(),
        };
        Solver::new(equation, scheme).map_err(|e| config_error(e.to_string()))
    }

    pub fn initial_data(&self) -> Result<RandomInitialData, Failure> {
        let d = &self.initial_data;
        let pair = |a: Option<[f64; 2]>, default: (f64, f64)| a.map_or(default, |a| (a[0], a[1]));
        let epsilon = d.epsilon.unwrap_or(0.1);
        if !(epsilon >= 0.0) {
            return Err(config_error("epsilon must be nonnegative"));
        }
        let data = match self.experiment {
            Experiment::BurgersRiemann => RandomInitialData::BurgersRiemann { epsilon },
            Experiment::ShockVortex => {
                let p = ShockVortexParams::default();
                let p = ShockVortexParams {
                    epsilon,
                    modes: d.modes.unwrap_or(p.modes),
                    delta: d.delta.unwrap_or(p.delta),
                    alpha: d.alpha.unwrap_or(p.alpha),
                    amplitude_range: pair(d.amplitude_range, p.amplitude_range),
                    phase_range: pair(d.phase_range, p.phase_range),
                };
                if !(p.alpha > 0.0) {
                    return Err(config_error("alpha must be positive"));
                }
                RandomInitialData::ShockVortex(p)
            }
            Experiment::KelvinHelmholtz => {
                let p = KelvinHelmholtzParams::default();
                RandomInitialData::KelvinHelmholtz(KelvinHelmholtzParams {
                    epsilon,
                    modes: d.modes.unwrap_or(p.modes),
                    interfaces: pair(d.interfaces, p.interfaces),
                    amplitude_range: pair(d.amplitude_range, p.amplitude_range),
                    phase_range: pair(d.phase_range, p.phase_range),
                })
            }
        };
        if data.draw_len() == 0 && self.experiment != Experiment::BurgersRiemann {
            return Err(config_error("modes must be positive"));
        }
        Ok(data)
    }

    /// The configured functionals; region weights live on the finest grid.
    pub fn functionals(&self) -> Result<Vec<Functional>, Failure> {
        let finest = self.base_grid()?.at_level(self.levels);
        self.functionals
            .iter()
            .map(|f| {
                let observable = match f.observable {
                    ObservableName::Identity => Observable::Identity { component: f.component },
                    ObservableName::Square => Observable::Square { component: f.component },
                    ObservableName::Legendre => Observable::Legendre {
                        order: f.order.unwrap_or(0),
                        component: f.component,
                        lower: f.lower.unwrap_or(-1.0),
                        upper: f.upper.unwrap_or(1.0),
                    },
                };
                let scale = f.weight.unwrap_or(1.0);
                let weight = match &f.region {
                    None => SpatialWeight::Constant(scale),
                    Some(r) => {
                        let field = Field::from_midpoints(finest, 1, |x, out| {
                            let inside = r.chunks(2).enumerate().all(|(axis, b)| b[0] <= x[axis] && x[axis] < b[1]);
                            out[0] = if inside { scale } else { 0.0 };
                            Ok(())
                        })
                        .map_err(|e| config_error(e.to_string()))?;
                        SpatialWeight::Cells(field)
                    }
                };
                Ok(Functional::new(weight, observable))
            })
            .collect()
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
