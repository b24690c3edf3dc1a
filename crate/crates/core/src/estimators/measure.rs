//! Signed empirical measures over fields.

use std::collections::BTreeMap;

use num_rational::Ratio;

use super::functional::Functional;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::random::Role;

/// Where an atom came from: estimator level, sample index and pair role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomTag {
    pub level: u32,
    pub index: u64,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: Ratio<i64>,
    pub tag: AtomTag,
    pub field: Field,
}

impl Atom {
    pub fn weight_f64(&self) -> f64 {
        *self.weight.numer() as f64 / *self.weight.denom() as f64
    }
}

/// `Σ_a w_a δ_{u_a}` with rational, possibly negative weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignedEmpiricalMeasure {
    atoms: Vec<Atom>,
}

/// Mean and variance fields of a measure on its finest grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStatistics {
    pub mean: Field,
    pub variance: Field,
    /// `Σ |negative variance| Δx^d` removed by clamping, per component.
    pub clamp_mass: Vec<f64>,
}

impl SignedEmpiricalMeasure {
    pub fn new() -> Self {
        Self::default()
    }

    /// Equal-weight probability measure; tags are `(level, k, Single)`.
    pub fn uniform(level: u32, fields: Vec<Field>) -> Result<Self> {
        let m = fields.len() as i64;
        if m == 0 {
            return Err(Error::InvalidArgument("empty ensemble".into()));
        }
        let mut out = Self::new();
        for (k, field) in fields.into_iter().enumerate() {
            out.push(Atom {
                weight: Ratio::new(1, m),
                tag: AtomTag { level, index: k as u64, role: Role::Single },
                field,
            });
        }
        Ok(out)
    }

    pub fn push(&mut self, atom: Atom) {
        self.atoms.push(atom);
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Exact sum of the weights.
    pub fn weight_sum(&self) -> Ratio<i64> {
        self.atoms.iter().fold(Ratio::from_integer(0), |acc, a| acc + a.weight)
    }

    pub fn is_signed(&self) -> bool {
        self.atoms.iter().any(|a| *a.weight.numer() < 0)
    }

    /// `αμ + βν` (atoms concatenated, weights scaled).
    pub fn combine(&self, alpha: Ratio<i64>, other: &Self, beta: Ratio<i64>) -> Self {
        let scaled = |m: &Self, s: Ratio<i64>| -> Vec<Atom> {
            m.atoms.iter().map(|a| Atom { weight: a.weight * s, ..a.clone() }).collect()
        };
        let mut atoms = scaled(self, alpha);
        atoms.extend(scaled(other, beta));
        Self { atoms }
    }

    /// Highest grid level among the atoms.
    pub fn finest_level(&self) -> Option<u32> {
        self.atoms.iter().map(|a| a.field.grid().level()).max()
    }

    /// Per-cell statistics with coarse atoms prolonged to the finest grid.
    pub fn field_statistics(&self) -> Result<FieldStatistics> {
        let level = self.finest_level().ok_or_else(|| Error::InvalidArgument("empty measure".into()))?;
        let first = &self.atoms[0].field;
        let grid = first.grid().at_level(level);
        let n = first.ncomp();
        let mut mean = vec![0.0; n * grid.num_cells()];
        let mut second = vec![0.0; n * grid.num_cells()];
        for atom in &self.atoms {
            if !atom.field.grid().same_family(first.grid()) || atom.field.ncomp() != n {
                return Err(Error::GridMismatch("atoms do not share a grid family".into()));
            }
            let w = atom.weight_f64();
            let field = atom.field.to_level(level)?;
            for ((m, s), v) in mean.iter_mut().zip(second.iter_mut()).zip(field.values()) {
                *m += w * v;
                *s += w * v * v;
            }
        }
        let vol = grid.cell_volume();
        let mut clamp_mass = vec![0.0; n];
        let variance: Vec<f64> = second
            .iter()
            .zip(&mean)
            .enumerate()
            .map(|(i, (s, m))| {
                let v = s - m * m;
                if v < 0.0 {
                    clamp_mass[i % n] += -v * vol;
                    0.0
                } else {
                    v
                }
            })
            .collect();
        Ok(FieldStatistics {
            mean: Field::new(grid, n, mean)?,
            variance: Field::new(grid, n, variance)?,
            clamp_mass,
        })
    }

    /// `Σ_a w_a ⟨ψ, g(u_a)⟩`, each atom integrated on its own grid.
    pub fn functional_value(&self, functional: &Functional) -> Result<f64> {
        let mut total = 0.0;
        for atom in &self.atoms {
            total += atom.weight_f64() * functional.apply(&atom.field)?;
        }
        Ok(total)
    }

    /// Same as [`functional_value`](Self::functional_value) with every atom
    /// first prolonged to the finest grid.
    pub fn functional_value_on_finest(&self, functional: &Functional) -> Result<f64> {
        let level = self.finest_level().unwrap_or(0);
        let mut total = 0.0;
        for atom in &self.atoms {
            total += atom.weight_f64() * functional.apply(&atom.field.to_level(level)?)?;
        }
        Ok(total)
    }

    /// Per-sample contributions `Y_k = Σ_{atoms of k} sign(w) ⟨ψ, g(u)⟩`,
    /// grouped by estimator level.
    fn samples_by_level(&self, functional: &Functional) -> Result<BTreeMap<u32, BTreeMap<u64, f64>>> {
        let mut levels: BTreeMap<u32, BTreeMap<u64, f64>> = BTreeMap::new();
        for atom in &self.atoms {
            let value = functional.apply(&atom.field)?;
            let sign = if *atom.weight.numer() < 0 { -1.0 } else { 1.0 };
            *levels.entry(atom.tag.level).or_default().entry(atom.tag.index).or_insert(0.0) += sign * value;
        }
        Ok(levels)
    }

    /// `Σ_{atoms at level l} w ⟨ψ, g(u)⟩` for every estimator level present.
    pub fn level_contributions(&self, functional: &Functional) -> Result<Vec<(u32, f64)>> {
        let mut out: BTreeMap<u32, f64> = BTreeMap::new();
        for atom in &self.atoms {
            *out.entry(atom.tag.level).or_insert(0.0) += atom.weight_f64() * functional.apply(&atom.field)?;
        }
        Ok(out.into_iter().collect())
    }

    /// Estimated standard error `sqrt(Σ_l s_l^2 / M_l)` of
    /// [`functional_value`](Self::functional_value), using the unbiased
    /// sample variance of the per-sample contributions on each level.
    /// `NaN` when some level has a single sample.
    pub fn functional_std_error(&self, functional: &Functional) -> Result<f64> {
        let mut var = 0.0;
        for samples in self.samples_by_level(functional)?.into_values() {
            let m = samples.len();
            if m < 2 {
                return Ok(f64::NAN);
            }
            let mean = samples.values().sum::<f64>() / m as f64;
            let s2 = samples.values().map(|y| (y - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            var += s2 / m as f64;
        }
        Ok(var.sqrt())
    }
}
