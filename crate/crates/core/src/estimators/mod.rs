//! Monte-Carlo and multilevel Monte-Carlo estimators.
//!
//! Every sample is keyed by `(level, index)`; keys are evolved on the worker
//! pool and the results are assembled in ascending key order, so estimator
//! output does not depend on the number of workers.

pub mod allocation;
pub mod functional;
pub mod measure;

pub use allocation::{
    constraint_value, fit_decay_rate, normalize_variances, optimal_samples, speedup, work_fvm, work_mc,
    work_mlmc, LevelPlan,
};
pub use functional::{legendre, Functional, Observable, SpatialWeight};
pub use measure::{Atom, AtomTag, FieldStatistics, SignedEmpiricalMeasure};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::fvm::Solver;
use crate::grid::{Field, Grid};
use crate::random::{DrawSource, RandomInitialData, Role, SampleKey};
use crate::relaxation::{evolve_pair_relaxed, RelaxationConfig};
use crate::workers::Workers;

/// How the coarse member of an MLMC pair is evolved.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Coupling {
    /// Fine and coarse evolve independently from the shared draw.
    #[default]
    Standard,
    /// The coarse member is reset from the fine one every `T_0`.
    Relaxed(RelaxationConfig),
}

/// Everything needed to turn sample keys into evolved fields.
#[derive(Clone, Copy)]
pub struct Ensemble<'a> {
    pub data: &'a RandomInitialData,
    pub source: &'a dyn DrawSource,
    /// Level-0 grid.
    pub base: Grid,
    pub solver: Solver,
    pub final_time: f64,
    pub workers: Workers,
}

impl<'a> Ensemble<'a> {
    pub fn grid(&self, level: u32) -> Grid {
        self.base.at_level(level)
    }

    pub fn dx(&self, level: u32) -> f64 {
        self.grid(level).dx(0)
    }

    /// Initial field of one sample on `level`.
    pub fn initial(&self, key: &SampleKey, level: u32) -> Result<Field> {
        self.data.sample_field(self.source, key, self.grid(level))
    }

    /// Evolved single sample.
    pub fn single(&self, key: &SampleKey) -> Result<Field> {
        let u0 = self.initial(key, key.level)?;
        self.solver.evolve(&u0, self.final_time)
    }

    /// Evolved `(fine, coarse)` pair for estimator level `key.level ≥ 1`.
    pub fn pair(&self, level: u32, index: u64, coupling: Coupling) -> Result<(Field, Field)> {
        if level == 0 {
            return Err(Error::InvalidArgument("pairs start at level 1".into()));
        }
        let fine0 = self.initial(&SampleKey::new(level, index, Role::Fine), level)?;
        let coarse0 = self.initial(&SampleKey::new(level, index, Role::Coarse), level - 1)?;
        match coupling {
            Coupling::Standard => {
                let fine = self.solver.evolve(&fine0, self.final_time)?;
                let coarse = self.solver.evolve(&coarse0, self.final_time)?;
                Ok((fine, coarse))
            }
            Coupling::Relaxed(relax) => evolve_pair_relaxed(&self.solver, &fine0, &coarse0, self.final_time, &relax),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.base.level() != 0 {
            return Err(Error::InvalidArgument("ensemble base grid must be level 0".into()));
        }
        if self.data.equation() != self.solver.equation {
            return Err(Error::InvalidArgument("initial data and solver disagree on the equation".into()));
        }
        if !(self.final_time >= 0.0) {
            return Err(Error::InvalidArgument("final time must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Runs `f` on every key and fails with the full list of failing keys.
fn run_keys<T: Send>(
    workers: Workers,
    keys: &[SampleKey],
    f: impl Fn(&SampleKey) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let results = workers.map(keys, |k| f(k));
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (key, res) in keys.iter().zip(results) {
        match res {
            Ok(v) => ok.push(v),
            Err(e) => failed.push((*key, e.to_string())),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(Error::SampleFailures(failed))
    }
}

/// `(1/M) Σ_k δ_{u_k}` with `M` samples evolved on `level`.
pub fn mc_estimate(ens: &Ensemble<'_>, samples: usize, level: u32) -> Result<SignedEmpiricalMeasure> {
    ens.validate()?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let keys: Vec<SampleKey> = (0..samples as u64).map(|k| SampleKey::new(level, k, Role::Single)).collect();
    let fields = run_keys(ens.workers, &keys, |key| ens.single(key))?;
    SignedEmpiricalMeasure::uniform(level, fields)
}

/// Telescoping estimator with `samples[l]` pairs on level `l`.
pub fn mlmc_estimate(ens: &Ensemble<'_>, samples: &[usize]) -> Result<SignedEmpiricalMeasure> {
    mlmc_estimate_coupled(ens, samples, Coupling::Standard)
}

pub(crate) fn mlmc_estimate_coupled(
    ens: &Ensemble<'_>,
    samples: &[usize],
    coupling: Coupling,
) -> Result<SignedEmpiricalMeasure> {
    ens.validate()?;
    if samples.is_empty() || samples.iter().any(|&m| m == 0) {
        return Err(Error::InvalidArgument("every level needs at least one sample".into()));
    }
    let mut keys = Vec::new();
    for (level, &m) in samples.iter().enumerate() {
        let role = if level == 0 { Role::Single } else { Role::Fine };
        keys.extend((0..m as u64).map(|k| SampleKey::new(level as u32, k, role)));
    }
    let evolved = run_keys(ens.workers, &keys, |key| {
        if key.level == 0 {
            ens.single(key).map(|f| (f, None))
        } else {
            ens.pair(key.level, key.index, coupling).map(|(f, c)| (f, Some(c)))
        }
    })?;

    let mut measure = SignedEmpiricalMeasure::new();
    for (key, (fine, coarse)) in keys.iter().zip(evolved) {
        let m = samples[key.level as usize] as i64;
        measure.push(Atom {
            weight: Ratio::new(1, m),
            tag: AtomTag { level: key.level, index: key.index, role: key.role },
            field: fine,
        });
        if let Some(coarse) = coarse {
            measure.push(Atom {
                weight: Ratio::new(-1, m),
                tag: AtomTag { level: key.level, index: key.index, role: Role::Coarse },
                field: coarse,
            });
        }
    }
    Ok(measure)
}

/// Measured variance of one estimator level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelVariance {
    pub level: u32,
    pub dx: f64,
    /// One entry per functional: `V_0` is the plain variance of `⟨ψ, g(u^0)⟩`,
    /// `V_l` the variance of `⟨ψ, g(u^l) - g(u^{l-1})⟩` over coupled pairs.
    pub variance: Vec<f64>,
    /// Sample mean of the same quantity.
    pub mean: Vec<f64>,
}

/// Probe pass: `samples` draws on each level `0..=max_level`.
pub fn estimate_level_variances(
    ens: &Ensemble<'_>,
    samples: usize,
    max_level: u32,
    functionals: &[Functional],
) -> Result<Vec<LevelVariance>> {
    estimate_level_variances_coupled(ens, samples, max_level, functionals, Coupling::Standard)
}

pub fn estimate_level_variances_coupled(
    ens: &Ensemble<'_>,
    samples: usize,
    max_level: u32,
    functionals: &[Functional],
    coupling: Coupling,
) -> Result<Vec<LevelVariance>> {
    if samples < 2 {
        return Err(Error::InvalidArgument("variance probe needs at least 2 samples".into()));
    }
    let plan = vec![samples; max_level as usize + 1];
    let measure = mlmc_estimate_coupled(ens, &plan, coupling)?;
    level_variances_from(&measure, ens, functionals)
}

/// Applies the variance formula to the per-sample level differences already
/// present in an MLMC measure.
pub fn level_variances_from(
    measure: &SignedEmpiricalMeasure,
    ens: &Ensemble<'_>,
    functionals: &[Functional],
) -> Result<Vec<LevelVariance>> {
    let max_level = measure.atoms().iter().map(|a| a.tag.level).max().unwrap_or(0);
    let mut out = Vec::new();
    for level in 0..=max_level {
        let mut variance = Vec::with_capacity(functionals.len());
        let mut mean = Vec::with_capacity(functionals.len());
        for func in functionals {
            let ys = per_sample_differences(measure, level, func)?;
            let m = ys.len() as f64;
            let first = ys.iter().sum::<f64>() / m;
            let second = ys.iter().map(|y| y * y).sum::<f64>() / m;
            let mut v = second - first * first;
            if v < 0.0 {
                log::warn!("level {level}: negative variance {v:e} from roundoff clamped to 0");
                v = 0.0;
            }
            variance.push(v);
            mean.push(first);
        }
        out.push(LevelVariance { level, dx: ens.dx(level), variance, mean });
    }
    Ok(out)
}

/// `⟨ψ, g(u^l_k)⟩ - ⟨ψ, g(u^{l-1}_k)⟩` for every sample `k` on `level`
/// (no coarse term on level 0), in sample order.
pub fn per_sample_differences(
    measure: &SignedEmpiricalMeasure,
    level: u32,
    functional: &Functional,
) -> Result<Vec<f64>> {
    let mut ys: Vec<(u64, f64)> = Vec::new();
    for atom in measure.atoms().iter().filter(|a| a.tag.level == level) {
        let value = functional.apply(&atom.field)?;
        let signed = if atom.tag.role == Role::Coarse { -value } else { value };
        match ys.last_mut() {
            Some((idx, y)) if *idx == atom.tag.index => *y += signed,
            _ => ys.push((atom.tag.index, signed)),
        }
    }
    if ys.is_empty() {
        return Err(Error::InsufficientData(format!("no samples on level {level}")));
    }
    Ok(ys.into_iter().map(|(_, y)| y).collect())
}
