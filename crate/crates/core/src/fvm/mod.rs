//! Finite-volume evolution operator for Burgers and Euler.
//!
//! Method of lines on a uniform grid: component-wise reconstruction of cell
//! averages, an interface flux per axis, and a strong-stability-preserving
//! Runge-Kutta integrator. The time step follows the CFL rule
//! `Δt = c Δx / λ_max` and is clipped so the last step lands exactly on the
//! requested final time.

mod diagnostics;
mod flux;
mod weno;

pub use diagnostics::{entropy_residual, positive_entropy_mass, weak_bv_sum, Snapshot, Trajectory};
pub use flux::{entropy_flux_numerical, flux_burgers, numerical_flux, rusanov, FluxKind, FluxStats};
pub use weno::weno3_reconstruct;

use crate::error::{BlowUp, Error, Result};
use crate::grid::{Field, GAMMA};

/// Conserved state of at most four components; unused slots are zero.
pub type State = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Equation {
    /// `u_t + (u^2/2)_x = 0`; on 2D grids the same flux acts along each axis.
    Burgers,
    /// Compressible Euler with conserved `(ρ, ρw_x, ρw_y, E)`.
    Euler { gamma: f64 },
}

impl Equation {
    pub fn euler() -> Self {
        Equation::Euler { gamma: GAMMA }
    }

    pub fn ncomp(&self) -> usize {
        match self {
            Equation::Burgers => 1,
            Equation::Euler { .. } => 4,
        }
    }

    #[inline]
    pub fn flux(&self, u: &[f64], axis: usize) -> State {
        match *self {
            Equation::Burgers => [flux_burgers(u[0]), 0.0, 0.0, 0.0],
            Equation::Euler { gamma } => {
                let rho = u[0];
                let un = u[1 + axis] / rho;
                let p = pressure(gamma, u);
                let mut f = [u[1 + axis], u[1] * un, u[2] * un, (u[3] + p) * un];
                f[1 + axis] += p;
                f
            }
        }
    }

    /// Largest characteristic speed along `axis`.
    #[inline]
    pub fn max_speed(&self, u: &[f64], axis: usize) -> f64 {
        match *self {
            Equation::Burgers => u[0].abs(),
            Equation::Euler { gamma } => {
                let rho = u[0];
                let p = pressure(gamma, u);
                (u[1 + axis] / rho).abs() + (gamma * p / rho).sqrt()
            }
        }
    }

    /// Finite, and for Euler positive density and pressure.
    #[inline]
    pub fn is_admissible(&self, u: &[f64]) -> bool {
        match *self {
            Equation::Burgers => u[0].is_finite(),
            Equation::Euler { gamma } => {
                u[..4].iter().all(|v| v.is_finite()) && u[0] > 0.0 && pressure(gamma, u) > 0.0
            }
        }
    }

    /// Convex entropy: `u^2/2` for Burgers, `-ρ s` with `s = ln(p ρ^{-γ})` for Euler.
    #[inline]
    pub fn entropy(&self, u: &[f64]) -> f64 {
        match *self {
            Equation::Burgers => 0.5 * u[0] * u[0],
            Equation::Euler { gamma } => -u[0] * specific_entropy(gamma, u),
        }
    }

    #[inline]
    pub fn entropy_flux(&self, u: &[f64], axis: usize) -> f64 {
        match *self {
            Equation::Burgers => u[0] * u[0] * u[0] / 3.0,
            Equation::Euler { gamma } => -u[1 + axis] * specific_entropy(gamma, u),
        }
    }
}

#[inline]
fn pressure(gamma: f64, u: &[f64]) -> f64 {
    (gamma - 1.0) * (u[3] - 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0])
}

#[inline]
fn specific_entropy(gamma: f64, u: &[f64]) -> f64 {
    (pressure(gamma, u) / u[0].powf(gamma)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reconstruction {
    /// Piecewise constant, first order.
    None,
    Weno3,
}

impl Reconstruction {
    /// Ghost cells needed on each side.
    pub fn stencil_half_width(&self) -> usize {
        match self {
            Reconstruction::None => 1,
            Reconstruction::Weno3 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    SspRk2,
    SspRk3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Zero-gradient extrapolation.
    Outflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub flux: FluxKind,
    pub reconstruction: Reconstruction,
    pub integrator: Integrator,
    pub cfl: f64,
    pub boundary: [Boundary; 2],
    pub weno_eps: f64,
}

impl SchemeConfig {
    /// First-order reconstruction with SSP-RK2 at CFL 0.45.
    pub fn first_order(flux: FluxKind, boundary: [Boundary; 2]) -> Self {
        Self {
            flux,
            reconstruction: Reconstruction::None,
            integrator: Integrator::SspRk2,
            cfl: 0.45,
            boundary,
            weno_eps: 1e-6,
        }
    }

    /// WENO3 with SSP-RK3 at CFL 0.4.
    pub fn weno3(flux: FluxKind, boundary: [Boundary; 2]) -> Self {
        Self {
            flux,
            reconstruction: Reconstruction::Weno3,
            integrator: Integrator::SspRk3,
            cfl: 0.4,
            boundary,
            weno_eps: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::InvalidArgument(format!("CFL number {} not in (0,1)", self.cfl)));
        }
        if !(self.weno_eps > 0.0) {
            return Err(Error::InvalidArgument("WENO regularizer must be positive".into()));
        }
        Ok(())
    }
}

/// Maximum characteristic speed over all cells and active axes.
pub fn max_wave_speed(field: &Field, eq: &Equation) -> f64 {
    let n = field.ncomp();
    let dim = field.grid().dim();
    let mut lambda: f64 = 0.0;
    for cell in field.values().chunks_exact(n) {
        for axis in 0..dim {
            lambda = lambda.max(eq.max_speed(&pad(cell), axis));
        }
    }
    lambda
}

/// CFL time step, clipped to `remaining`.
pub fn stable_dt(field: &Field, eq: &Equation, cfl: f64, remaining: f64) -> f64 {
    let lambda = max_wave_speed(field, eq);
    let dx = field.grid().min_dx();
    let dt = if lambda > 0.0 { cfl * dx / lambda } else { cfl * dx };
    dt.min(remaining)
}

#[inline]
fn pad(cell: &[f64]) -> State {
    let mut s = [0.0; 4];
    s[..cell.len()].copy_from_slice(cell);
    s
}

/// Counters accumulated over one evolution.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct SolveStats {
    pub steps: u64,
    pub hllc_fallbacks: u64,
    pub reconstruction_fallbacks: u64,
}

/// One accepted time step as seen by a [`StepObserver`].
pub struct StepInfo<'a> {
    pub time: f64,
    pub dt: f64,
    /// Time left after this step.
    pub remaining: f64,
    pub before: &'a Field,
    pub after: &'a Field,
    /// Stage-weighted divergence of the numerical entropy flux, per cell,
    /// when the observer asked for it.
    pub entropy_flux_divergence: Option<&'a [f64]>,
}

pub trait StepObserver {
    /// Whether `on_step` should be called at all.
    fn wants_steps(&self) -> bool {
        true
    }
    fn wants_entropy_flux(&self) -> bool {
        false
    }
    fn on_step(&mut self, step: &StepInfo<'_>);
}

impl StepObserver for () {
    fn wants_steps(&self) -> bool {
        false
    }
    fn on_step(&mut self, _: &StepInfo<'_>) {}
}

/// The discrete evolution operator for one equation and scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solver {
    pub equation: Equation,
    pub scheme: SchemeConfig,
}

impl Solver {
    pub fn new(equation: Equation, scheme: SchemeConfig) -> Result<Self> {
        scheme.validate()?;
        Ok(Self { equation, scheme })
    }

    /// Evolves `u0` to time `t_final`.
    pub fn evolve(&self, u0: &Field, t_final: f64) -> Result<Field> {
        self.evolve_observed(u0, t_final, &mut ()).map(|(f, _)| f)
    }

    pub fn evolve_observed(
        &self,
        u0: &Field,
        t_final: f64,
        observer: &mut dyn StepObserver,
    ) -> Result<(Field, SolveStats)> {
        if !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidArgument(format!("final time {t_final} must be finite and >= 0")));
        }
        if u0.ncomp() != self.equation.ncomp() {
            return Err(Error::ComponentMismatch { expected: self.equation.ncomp(), got: u0.ncomp() });
        }
        let g = u0.grid();
        for axis in 0..g.dim() {
            if g.cells(axis) < self.scheme.reconstruction.stencil_half_width() {
                return Err(Error::InvalidArgument("grid too small for reconstruction stencil".into()));
            }
        }
        if let Some(cell) = (0..g.num_cells()).find(|&k| !self.equation.is_admissible(&pad(u0.cell(k)))) {
            return Err(Error::BlowUp(BlowUp { time: 0.0, cell, reason: "inadmissible initial state" }));
        }

        let mut stepper = Stepper::new(self, u0);
        let mut stats = SolveStats::default();
        let notify = observer.wants_steps();
        let track_entropy = notify && observer.wants_entropy_flux();
        let mut remaining = t_final;
        while remaining > 0.0 {
            let dt = stable_dt(&stepper.u, &self.equation, self.scheme.cfl, remaining);
            let time = t_final - remaining;
            let before = notify.then(|| stepper.u.clone());
            stepper.step(dt, time, track_entropy, &mut stats)?;
            remaining -= dt;
            stats.steps += 1;
            if let Some(before) = before.as_ref() {
                observer.on_step(&StepInfo {
                    time,
                    dt,
                    remaining,
                    before,
                    after: &stepper.u,
                    entropy_flux_divergence: track_entropy.then_some(&stepper.entropy_div[..]),
                });
            }
        }
        Ok((stepper.u, stats))
    }
}

struct Stepper<'s> {
    solver: &'s Solver,
    u: Field,
    stage1: Vec<f64>,
    stage2: Vec<f64>,
    rhs: Vec<f64>,
    entropy_div: Vec<f64>,
    entropy_stage: Vec<f64>,
    line: LineBuffers,
}

struct LineBuffers {
    cells: Vec<f64>,
    minus: Vec<f64>,
    plus: Vec<f64>,
    flux: Vec<f64>,
    eflux: Vec<f64>,
}

impl<'s> Stepper<'s> {
    fn new(solver: &'s Solver, u0: &Field) -> Self {
        let len = u0.values().len();
        let g = u0.grid();
        let longest = g.cells(0).max(g.cells(1));
        let ghosts = solver.scheme.reconstruction.stencil_half_width();
        let n = u0.ncomp();
        Self {
            solver,
            u: u0.clone(),
            stage1: vec![0.0; len],
            stage2: vec![0.0; len],
            rhs: vec![0.0; len],
            entropy_div: vec![0.0; g.num_cells()],
            entropy_stage: vec![0.0; g.num_cells()],
            line: LineBuffers {
                cells: vec![0.0; (longest + 2 * ghosts) * n],
                minus: vec![0.0; (longest + 2) * n],
                plus: vec![0.0; (longest + 2) * n],
                flux: vec![0.0; (longest + 1) * n],
                eflux: vec![0.0; longest + 1],
            },
        }
    }

    fn step(&mut self, dt: f64, time: f64, track_entropy: bool, stats: &mut SolveStats) -> Result<()> {
        let grid = *self.u.grid();
        let n = self.u.ncomp();
        let eq = self.solver.equation;
        let scheme = self.solver.scheme;
        let mut ent = if track_entropy { Some(&mut self.entropy_stage[..]) } else { None };
        self.entropy_div.iter_mut().for_each(|v| *v = 0.0);

        // stage 1: forward Euler from u
        compute_rhs(&eq, &scheme, &grid, n, self.u.values(), &mut self.rhs, ent.as_deref_mut(), &mut self.line, stats);
        let w1 = match scheme.integrator {
            Integrator::SspRk2 => 0.5,
            Integrator::SspRk3 => 1.0 / 6.0,
        };
        accumulate(&mut self.entropy_div, ent.as_deref(), w1);
        for ((s, u), r) in self.stage1.iter_mut().zip(self.u.values()).zip(&self.rhs) {
            *s = u + dt * r;
        }
        check_stage(&eq, n, &self.stage1, time + dt)?;

        compute_rhs(&eq, &scheme, &grid, n, &self.stage1, &mut self.rhs, ent.as_deref_mut(), &mut self.line, stats);
        match scheme.integrator {
            Integrator::SspRk2 => {
                accumulate(&mut self.entropy_div, ent.as_deref(), 0.5);
                for ((u, s), r) in self.u.values_mut().iter_mut().zip(&self.stage1).zip(&self.rhs) {
                    *u = 0.5 * *u + 0.5 * (s + dt * r);
                }
            }
            Integrator::SspRk3 => {
                accumulate(&mut self.entropy_div, ent.as_deref(), 1.0 / 6.0);
                for (((s2, u), s1), r) in
                    self.stage2.iter_mut().zip(self.u.values()).zip(&self.stage1).zip(&self.rhs)
                {
                    *s2 = 0.75 * u + 0.25 * (s1 + dt * r);
                }
                check_stage(&eq, n, &self.stage2, time + 0.5 * dt)?;
                compute_rhs(&eq, &scheme, &grid, n, &self.stage2, &mut self.rhs, ent.as_deref_mut(), &mut self.line, stats);
                accumulate(&mut self.entropy_div, ent.as_deref(), 2.0 / 3.0);
                for ((u, s2), r) in self.u.values_mut().iter_mut().zip(&self.stage2).zip(&self.rhs) {
                    *u = (1.0 / 3.0) * *u + (2.0 / 3.0) * (s2 + dt * r);
                }
            }
        }
        check_stage(&eq, n, self.u.values(), time + dt)
    }
}

fn accumulate(total: &mut [f64], stage: Option<&[f64]>, weight: f64) {
    if let Some(stage) = stage {
        for (t, s) in total.iter_mut().zip(stage) {
            *t += weight * s;
        }
    }
}

fn check_stage(eq: &Equation, n: usize, values: &[f64], time: f64) -> Result<()> {
    for (cell, u) in values.chunks_exact(n).enumerate() {
        if !eq.is_admissible(&pad(u)) {
            let reason = if u.iter().any(|v| !v.is_finite()) { "non-finite value" } else { "positivity violation" };
            return Err(Error::BlowUp(BlowUp { time, cell, reason }));
        }
    }
    Ok(())
}

/// `rhs = -Σ_axes (F_{i+1/2} - F_{i-1/2}) / Δx`; optionally the same
/// divergence of the numerical entropy flux into `entropy`.
#[allow(clippy::too_many_arguments)]
fn compute_rhs(
    eq: &Equation,
    scheme: &SchemeConfig,
    grid: &crate::grid::Grid,
    n: usize,
    u: &[f64],
    rhs: &mut [f64],
    mut entropy: Option<&mut [f64]>,
    buf: &mut LineBuffers,
    stats: &mut SolveStats,
) {
    rhs.iter_mut().for_each(|v| *v = 0.0);
    if let Some(e) = entropy.as_deref_mut() {
        e.iter_mut().for_each(|v| *v = 0.0);
    }
    let ghosts = scheme.reconstruction.stencil_half_width();
    let [nx, ny] = grid.shape();
    let mut flux_stats = FluxStats::default();

    for axis in 0..grid.dim() {
        let (len, stride, lines) = if axis == 0 { (nx, ny, ny) } else { (ny, 1, nx) };
        let inv_dx = 1.0 / grid.dx(axis);
        for line in 0..lines {
            let offset = if axis == 0 { line } else { line * ny };

            // gather with ghost cells
            for k in 0..len + 2 * ghosts {
                let pos = k as isize - ghosts as isize;
                let src = match scheme.boundary[axis] {
                    Boundary::Periodic => pos.rem_euclid(len as isize) as usize,
                    Boundary::Outflow => pos.clamp(0, len as isize - 1) as usize,
                };
                let cell = offset + src * stride;
                buf.cells[k * n..(k + 1) * n].copy_from_slice(&u[cell * n..(cell + 1) * n]);
            }

            // face values for cells -1..=len (buffer index m <-> cell m-1)
            for m in 0..len + 2 {
                let k = m + ghosts - 1;
                match scheme.reconstruction {
                    Reconstruction::None => {
                        buf.minus[m * n..(m + 1) * n].copy_from_slice(&buf.cells[k * n..(k + 1) * n]);
                        buf.plus[m * n..(m + 1) * n].copy_from_slice(&buf.cells[k * n..(k + 1) * n]);
                    }
                    Reconstruction::Weno3 => {
                        for c in 0..n {
                            let (lo, hi) = weno3_reconstruct(
                                buf.cells[(k - 1) * n + c],
                                buf.cells[k * n + c],
                                buf.cells[(k + 1) * n + c],
                                scheme.weno_eps,
                            );
                            buf.minus[m * n + c] = lo;
                            buf.plus[m * n + c] = hi;
                        }
                    }
                }
            }

            // interface f between cell f-1 and cell f, f = 0..=len
            for f in 0..=len {
                let mut left = pad(&buf.plus[f * n..(f + 1) * n]);
                let mut right = pad(&buf.minus[(f + 1) * n..(f + 2) * n]);
                if scheme.reconstruction != Reconstruction::None
                    && !(eq.is_admissible(&left) && eq.is_admissible(&right))
                {
                    stats.reconstruction_fallbacks += 1;
                    let kl = f + ghosts - 1;
                    left = pad(&buf.cells[kl * n..(kl + 1) * n]);
                    right = pad(&buf.cells[(kl + 1) * n..(kl + 2) * n]);
                }
                let flux = numerical_flux(eq, scheme.flux, &left, &right, axis, &mut flux_stats);
                buf.flux[f * n..(f + 1) * n].copy_from_slice(&flux[..n]);
                if entropy.is_some() {
                    buf.eflux[f] = entropy_flux_numerical(eq, &left, &right, axis);
                }
            }

            for k in 0..len {
                let cell = offset + k * stride;
                for c in 0..n {
                    rhs[cell * n + c] -= (buf.flux[(k + 1) * n + c] - buf.flux[k * n + c]) * inv_dx;
                }
                if let Some(e) = entropy.as_deref_mut() {
                    e[cell] += (buf.eflux[k + 1] - buf.eflux[k]) * inv_dx;
                }
            }
        }
    }
    stats.hllc_fallbacks += flux_stats.hllc_fallbacks;
}
