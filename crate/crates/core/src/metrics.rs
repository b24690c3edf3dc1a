//! Errors between estimates and references.

use crate::error::{Error, Result};
use crate::estimators::{SignedEmpiricalMeasure, SpatialWeight};
use crate::fit::{loglog_fit, LogLogFit};
use crate::grid::{Field, Grid};

/// `⟨ψ, ⟨μ, |ξ - u_exact(x)|⟩⟩` per component.
///
/// For a probability measure this is the pointwise `W_1` distance to the
/// Dirac `δ_{u_exact}` integrated against `ψ`; for signed MLMC measures it is
/// the same linear functional. Atoms are moved to the level of `exact`.
pub fn wasserstein_to_dirac(measure: &SignedEmpiricalMeasure, exact: &Field, psi: &SpatialWeight) -> Result<Vec<f64>> {
    let n = exact.ncomp();
    let grid = exact.grid();
    let weights = match psi {
        SpatialWeight::Constant(c) => vec![*c; grid.num_cells()],
        SpatialWeight::Cells(w) => {
            if !w.grid().same_family(grid) {
                return Err(Error::GridMismatch("weight and reference live on different domains".into()));
            }
            w.to_level(grid.level())?.component(0).collect()
        }
    };
    let mut out = vec![0.0; n];
    for atom in measure.atoms() {
        if atom.field.ncomp() != n {
            return Err(Error::ComponentMismatch { expected: n, got: atom.field.ncomp() });
        }
        if !atom.field.grid().same_family(grid) {
            return Err(Error::GridMismatch("atom and reference live on different domains".into()));
        }
        let w = atom.weight_f64();
        let field = atom.field.to_level(grid.level())?;
        for ((u, e), psi) in field.values().chunks_exact(n).zip(exact.values().chunks_exact(n)).zip(&weights) {
            for c in 0..n {
                out[c] += w * psi * (u[c] - e[c]).abs();
            }
        }
    }
    let vol = grid.cell_volume();
    Ok(out.into_iter().map(|v| v * vol).collect())
}

/// Values and weights of every atom in one cell, component `c`.
fn cell_samples(fields: &[(f64, Field)], idx: usize, c: usize) -> Vec<(f64, f64)> {
    fields.iter().map(|(w, f)| (f.cell(idx)[c], *w)).collect()
}

/// `W_1` between two weighted 1D empirical distributions.
fn w1_1d(mut a: Vec<(f64, f64)>, mut b: Vec<(f64, f64)>) -> f64 {
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let uniform = |s: &[(f64, f64)]| s.iter().all(|p| p.1 == s[0].1);
    if a.len() == b.len() && uniform(&a) && uniform(&b) {
        return a.iter().zip(&b).map(|(x, y)| (x.0 - y.0).abs()).sum::<f64>() / a.len() as f64;
    }
    // ∫ |F_A - F_B| over the merged support
    let mut events: Vec<(f64, f64)> = a.iter().copied().chain(b.iter().map(|&(x, w)| (x, -w))).collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut diff = 0.0;
    for pair in events.windows(2) {
        diff += pair[0].1;
        total += diff.abs() * (pair[1].0 - pair[0].0);
    }
    total
}

fn probability_fields(measure: &SignedEmpiricalMeasure, level: u32) -> Result<Vec<(f64, Field)>> {
    if measure.is_signed() {
        return Err(Error::SignedMeasure);
    }
    if measure.is_empty() {
        return Err(Error::InvalidArgument("empty measure".into()));
    }
    let total = measure.weight_sum();
    let total = *total.numer() as f64 / *total.denom() as f64;
    measure.atoms().iter().map(|a| Ok((a.weight_f64() / total, a.field.to_level(level)?))).collect()
}

/// Per-cell, per-component `W_1` between two probability measures, on the
/// finer of the two grids.
pub fn pointwise_w1(a: &SignedEmpiricalMeasure, b: &SignedEmpiricalMeasure) -> Result<Field> {
    let (Some(la), Some(lb)) = (a.finest_level(), b.finest_level()) else {
        return Err(Error::InvalidArgument("empty measure".into()));
    };
    let level = la.max(lb);
    let fa = probability_fields(a, level)?;
    let fb = probability_fields(b, level)?;
    let grid = *fa[0].1.grid();
    let n = fa[0].1.ncomp();
    if !grid.same_family(fb[0].1.grid()) {
        return Err(Error::GridMismatch("measures live on different domains".into()));
    }
    if fb[0].1.ncomp() != n {
        return Err(Error::ComponentMismatch { expected: n, got: fb[0].1.ncomp() });
    }
    let mut values = Vec::with_capacity(grid.num_cells() * n);
    for idx in 0..grid.num_cells() {
        for c in 0..n {
            values.push(w1_1d(cell_samples(&fa, idx, c), cell_samples(&fb, idx, c)));
        }
    }
    Field::new(grid, n, values)
}

/// `Σ_cells |A - B| Δx^d` per component.
pub fn l1_error(a: &Field, b: &Field) -> Result<Vec<f64>> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch("l1_error needs identical grids".into()));
    }
    if a.ncomp() != b.ncomp() {
        return Err(Error::ComponentMismatch { expected: a.ncomp(), got: b.ncomp() });
    }
    let n = a.ncomp();
    let mut out = vec![0.0; n];
    for (i, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
        out[i % n] += (x - y).abs();
    }
    let vol = a.grid().cell_volume();
    Ok(out.into_iter().map(|v| v * vol).collect())
}

/// Log-log slope of errors against resolutions or work.
pub fn fit_rate(errors: &[f64], scale: &[f64]) -> Result<LogLogFit> {
    loglog_fit(scale, errors)
}

/// Reference against which estimates are compared.
#[derive(Debug, Clone)]
pub enum ReferenceSolution {
    /// Unit-step Burgers data with jump at `1/2 + εX`, `X` uniform on
    /// `[-1/2, 1/2]`, on the unit interval with periodic or outflow boundaries.
    BurgersRiemann { epsilon: f64, periodic: bool },
    /// A stored fine-grid ensemble.
    Ensemble(SignedEmpiricalMeasure),
}

/// Cell average of a function that is linear between consecutive `kinks`.
fn piecewise_linear_average(f: impl Fn(f64) -> f64, a: f64, b: f64, kinks: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = kinks.iter().copied().filter(|k| *k > a && *k < b).collect();
    cuts.sort_by(f64::total_cmp);
    let mut pts = vec![a];
    pts.extend(cuts);
    pts.push(b);
    pts.windows(2).map(|p| f(0.5 * (p[0] + p[1])) * (p[1] - p[0])).sum::<f64>() / (b - a)
}

impl ReferenceSolution {
    /// Entropy solution of one Burgers sample whose jump sits at `jump`: a
    /// shock moving at 1/2 and, on the periodic domain, a rarefaction from
    /// the seam at 0. Valid while the shock stays inside the domain and has
    /// not met the fan.
    pub fn burgers_sample(jump: f64, t: f64, x: f64, periodic: bool) -> f64 {
        let shock = jump + 0.5 * t;
        if periodic && x < t {
            x / t
        } else if x < shock {
            1.0
        } else {
            0.0
        }
    }

    /// Expected value of [`burgers_sample`](Self::burgers_sample) over the
    /// jump location.
    pub fn burgers_mean(epsilon: f64, t: f64, x: f64, periodic: bool) -> f64 {
        if periodic && x < t {
            return x / t;
        }
        let y = x - 0.5 - 0.5 * t;
        if epsilon == 0.0 {
            return if y < 0.0 { 1.0 } else { 0.0 };
        }
        (0.5 - y / epsilon).clamp(0.0, 1.0)
    }

    /// Cell averages of the exact mean field at time `t`.
    pub fn mean_field(&self, grid: Grid, t: f64) -> Result<Field> {
        match *self {
            ReferenceSolution::BurgersRiemann { epsilon, periodic } => {
                burgers_grid_check(&grid, t, 0.5 - 0.5 * epsilon, 0.5 + 0.5 * epsilon, periodic)?;
                let c = 0.5 + 0.5 * t;
                let kinks = [t, c - 0.5 * epsilon, c + 0.5 * epsilon];
                let b = grid.boundaries(0);
                let values = b.windows(2).map(|w| {
                    piecewise_linear_average(|x| Self::burgers_mean(epsilon, t, x, periodic), w[0], w[1], &kinks)
                });
                Field::new(grid, 1, values.collect())
            }
            ReferenceSolution::Ensemble(ref m) => m.field_statistics()?.mean.to_level(grid.level()),
        }
    }

    /// Cell averages of the exact sample with jump at `1/2` (`X = 0`), the
    /// Dirac solution the ensemble concentrates on as `ε → 0`.
    pub fn dirac_field(&self, grid: Grid, t: f64) -> Result<Field> {
        match *self {
            ReferenceSolution::BurgersRiemann { periodic, .. } => burgers_sample_field(0.5, grid, t, periodic),
            ReferenceSolution::Ensemble(_) => {
                Err(Error::InvalidArgument("an ensemble reference has no Dirac solution".into()))
            }
        }
    }
}

/// Cell averages of the exact Burgers sample with jump at `jump`.
pub fn burgers_sample_field(jump: f64, grid: Grid, t: f64, periodic: bool) -> Result<Field> {
    burgers_grid_check(&grid, t, jump, jump, periodic)?;
    let kinks = [t, jump + 0.5 * t];
    let b = grid.boundaries(0);
    let values = b
        .windows(2)
        .map(|w| piecewise_linear_average(|x| ReferenceSolution::burgers_sample(jump, t, x, periodic), w[0], w[1], &kinks));
    Field::new(grid, 1, values.collect())
}

fn burgers_grid_check(grid: &Grid, t: f64, min_jump: f64, max_jump: f64, periodic: bool) -> Result<()> {
    if grid.dim() != 1 || grid.lower()[0] != 0.0 || grid.upper()[0] != 1.0 {
        return Err(Error::InvalidArgument("analytic Burgers reference lives on the 1D unit interval".into()));
    }
    let fan_meets_shock = periodic && t >= 2.0 * min_jump;
    let shock_leaves = max_jump + 0.5 * t >= 1.0;
    if !(t >= 0.0) || fan_meets_shock || shock_leaves {
        return Err(Error::InvalidArgument(format!("analytic Burgers reference invalid at t={t}")));
    }
    Ok(())
}
