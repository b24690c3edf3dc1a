//! Trajectory diagnostics: the weak-BV sum and discrete entropy production.

use super::{pad, Equation, Solver, StepInfo, StepObserver};
use crate::error::Result;
use crate::grid::Field;

/// State at the start of one time step.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub dt: f64,
    pub field: Field,
    /// Stage-weighted divergence of the numerical entropy flux over this step.
    pub entropy_flux_divergence: Vec<f64>,
}

/// Every time step of one evolution, plus the final state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub equation: Equation,
    pub snapshots: Vec<Snapshot>,
    pub last: Field,
}

impl Trajectory {
    /// Evolves `u0` to `t_final` and keeps every intermediate state.
    pub fn record(solver: &Solver, u0: &Field, t_final: f64) -> Result<Self> {
        let mut rec = Recorder { snapshots: Vec::new() };
        let (last, _) = solver.evolve_observed(u0, t_final, &mut rec)?;
        Ok(Self { equation: solver.equation, snapshots: rec.snapshots, last })
    }

    /// A trajectory of explicit snapshots; entropy flux divergences are taken as zero.
    pub fn from_states(equation: Equation, states: Vec<(f64, f64, Field)>, last: Field) -> Self {
        let snapshots = states
            .into_iter()
            .map(|(time, dt, field)| {
                let cells = field.grid().num_cells();
                Snapshot { time, dt, field, entropy_flux_divergence: vec![0.0; cells] }
            })
            .collect();
        Self { equation, snapshots, last }
    }

    fn state_after(&self, step: usize) -> &Field {
        self.snapshots.get(step + 1).map_or(&self.last, |s| &s.field)
    }
}

struct Recorder {
    snapshots: Vec<Snapshot>,
}

impl StepObserver for Recorder {
    fn wants_entropy_flux(&self) -> bool {
        true
    }

    fn on_step(&mut self, step: &StepInfo<'_>) {
        self.snapshots.push(Snapshot {
            time: step.time,
            dt: step.dt,
            field: step.before.clone(),
            entropy_flux_divergence: step.entropy_flux_divergence.map(<[f64]>::to_vec).unwrap_or_default(),
        });
    }
}

/// `∫ Σ (|u_{i+1,j} - u_{i,j}|^r + |u_{i,j+1} - u_{i,j}|^r) Δx^d dt` for one
/// component, with interior neighbour pairs only.
pub fn weak_bv_sum(trajectory: &Trajectory, r: f64, component: usize) -> f64 {
    trajectory
        .snapshots
        .iter()
        .map(|s| s.dt * neighbour_variation(&s.field, r, component))
        .sum()
}

fn neighbour_variation(field: &Field, r: f64, c: usize) -> f64 {
    let g = field.grid();
    let n = field.ncomp();
    let v = field.values();
    let [nx, ny] = g.shape();
    let mut total = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            let here = v[g.index(i, j) * n + c];
            if i + 1 < nx {
                total += (v[g.index(i + 1, j) * n + c] - here).abs().powf(r);
            }
            if g.dim() == 2 && j + 1 < ny {
                total += (v[g.index(i, j + 1) * n + c] - here).abs().powf(r);
            }
        }
    }
    total * g.cell_volume()
}

/// Per-step cell residuals `(η(u^{n+1}) - η(u^n)) / Δt + ∇·Q`.
///
/// Nonpositive values mean the step dissipated entropy in that cell.
pub fn entropy_residual(trajectory: &Trajectory) -> Vec<Field> {
    let eq = trajectory.equation;
    trajectory
        .snapshots
        .iter()
        .enumerate()
        .map(|(k, snap)| {
            let next = trajectory.state_after(k);
            let grid = *snap.field.grid();
            let values = (0..grid.num_cells())
                .map(|cell| {
                    let before = eq.entropy(&pad(snap.field.cell(cell)));
                    let after = eq.entropy(&pad(next.cell(cell)));
                    (after - before) / snap.dt + snap.entropy_flux_divergence.get(cell).copied().unwrap_or(0.0)
                })
                .collect();
            Field::new(grid, 1, values).expect("one value per cell")
        })
        .collect()
}

/// `Σ_n Δt_n Σ_i max(r_i^n, 0) Δx^d`.
pub fn positive_entropy_mass(trajectory: &Trajectory, residuals: &[Field]) -> f64 {
    trajectory
        .snapshots
        .iter()
        .zip(residuals)
        .map(|(s, r)| s.dt * r.values().iter().map(|v| v.max(0.0)).sum::<f64>() * r.grid().cell_volume())
        .sum()
}
