//! MLMC with relaxation: coupled pairs are evolved in windows of length
//! `T_0` and the coarse member is reset from the fine one at every window
//! end. This keeps pairs correlated for long times at the price of a bias
//! that no longer telescopes away.

use crate::error::{Error, Result};
use crate::estimators::{mlmc_estimate_coupled, Coupling, Ensemble, Functional, SignedEmpiricalMeasure};
use crate::fvm::Solver;
use crate::grid::Field;

/// How the fine member is transferred to the coarse grid at a reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    /// Conservative cell average over the children.
    #[default]
    Average,
    /// Value of the first child of each coarse cell.
    Injection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationConfig {
    /// Window length `T_0`.
    pub t0: f64,
    pub projection: Projection,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self { t0: 0.05, projection: Projection::Average }
    }
}

impl RelaxationConfig {
    pub fn new(t0: f64) -> Result<Self> {
        let cfg = Self { t0, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0) || !self.t0.is_finite() {
            return Err(Error::InvalidArgument(format!("relaxation time {} must be positive", self.t0)));
        }
        Ok(())
    }

    /// Window end times `T_0, 2T_0, …, T`; a single window when `T_0 ≥ T`.
    pub fn window_ends(&self, final_time: f64) -> Vec<f64> {
        let mut ends = Vec::new();
        let mut k = 1u32;
        loop {
            let t = f64::from(k) * self.t0;
            if t >= final_time {
                ends.push(final_time);
                return ends;
            }
            ends.push(t);
            k += 1;
        }
    }

    fn project(&self, fine: &Field) -> Result<Field> {
        match self.projection {
            Projection::Average => fine.restrict(),
            Projection::Injection => fine.inject(),
        }
    }
}

/// Evolves `(fine0, coarse0)` to `final_time`, resetting
/// `coarse := project(fine)` at every window end before `final_time`.
pub fn evolve_pair_relaxed(
    solver: &Solver,
    fine0: &Field,
    coarse0: &Field,
    final_time: f64,
    relax: &RelaxationConfig,
) -> Result<(Field, Field)> {
    relax.validate()?;
    if fine0.grid().level() == 0 || coarse0.grid() != &fine0.grid().coarser()? {
        return Err(Error::GridMismatch("relaxed pair needs adjacent levels".into()));
    }
    let ends = relax.window_ends(final_time);
    let mut fine = fine0.clone();
    let mut coarse = coarse0.clone();
    let mut start = 0.0;
    for (w, &end) in ends.iter().enumerate() {
        if w > 0 {
            coarse = relax.project(&fine)?;
        }
        let span = if w == 0 { end } else { end - start };
        fine = solver.evolve(&fine, span)?;
        coarse = solver.evolve(&coarse, span)?;
        start = end;
    }
    Ok((fine, coarse))
}

/// Bias introduced by relaxation for one functional.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    /// `Σ_{l≥1} |⟨ψ, ⟨ν^l - ν^{l-1}, g⟩⟩|` as measured.
    pub bias: f64,
    /// Monte-Carlo standard error of the same sum of level means.
    pub noise: f64,
    /// Per-level signed contributions for `l ≥ 1`.
    pub levels: Vec<f64>,
}

/// MLMC estimate with relaxed pairs plus one bias report per functional.
pub fn relaxed_mlmc_estimate(
    ens: &Ensemble<'_>,
    samples: &[usize],
    relax: &RelaxationConfig,
    functionals: &[Functional],
) -> Result<(SignedEmpiricalMeasure, Vec<BiasReport>)> {
    relax.validate()?;
    let measure = mlmc_estimate_coupled(ens, samples, Coupling::Relaxed(*relax))?;
    let reports = functionals.iter().map(|f| bias_report(&measure, f)).collect::<Result<_>>()?;
    Ok((measure, reports))
}

/// Bias report read off an existing MLMC measure.
pub fn bias_report(measure: &SignedEmpiricalMeasure, functional: &Functional) -> Result<BiasReport> {
    let max_level = measure.atoms().iter().map(|a| a.tag.level).max().unwrap_or(0);
    let mut levels = Vec::new();
    let mut noise2 = 0.0;
    for level in 1..=max_level {
        let ys = crate::estimators::per_sample_differences(measure, level, functional)?;
        let m = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / m;
        if ys.len() > 1 {
            noise2 += ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (m - 1.0) / m;
        }
        levels.push(mean);
    }
    Ok(BiasReport { bias: levels.iter().map(|v| v.abs()).sum(), noise: noise2.sqrt(), levels })
}
