//! Random initial data with reproducible, level-consistent draws.
//!
//! A draw is the finite tuple of i.i.d. uniforms a variant needs. Draws come
//! from a counter-based generator: ChaCha20 keyed by the master seed (expanded
//! with SplitMix64) on stream `(level << 48) | index`. Any key can therefore be
//! drawn without sequential state, and fine and coarse members of one MLMC
//! pair read the same stream. Changing this layout changes every experiment
//! output.

use std::f64::consts::PI;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::fvm::Equation;
use crate::grid::{EulerState, Field, Grid, GAMMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Single,
    Fine,
    Coarse,
}

/// Identifies one random sample. The role does not enter the draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleKey {
    pub level: u32,
    pub index: u64,
    pub role: Role,
}

impl SampleKey {
    pub fn new(level: u32, index: u64, role: Role) -> Self {
        Self { level, index, role }
    }

    fn stream(&self) -> u64 {
        debug_assert!(self.index < 1 << 48 && self.level < 1 << 16);
        (u64::from(self.level) << 48) | self.index
    }
}

/// Uniforms in `[0, 1)` for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw(pub Vec<f64>);

pub trait DrawSource: Sync {
    fn draw(&self, key: &SampleKey, len: usize) -> Draw;
}

/// The frozen counter-based generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    pub master_seed: u64,
}

impl CounterRng {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl DrawSource for CounterRng {
    fn draw(&self, key: &SampleKey, len: usize) -> Draw {
        let mut state = self.master_seed;
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha20Rng::from_seed(seed);
        rng.set_stream(key.stream());
        Draw((0..len).map(|_| (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)).collect())
    }
}

/// `1` left of `1/2 + εX`, `0` right of it, with `X = u - 1/2`.
pub fn burgers_riemann(draw: &Draw, x: f64, epsilon: f64) -> f64 {
    let shift = draw.0[0] - 0.5;
    if x < 0.5 + epsilon * shift {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockVortexParams {
    pub epsilon: f64,
    pub modes: usize,
    pub delta: f64,
    pub alpha: f64,
    pub amplitude_range: (f64, f64),
    pub phase_range: (f64, f64),
}

impl Default for ShockVortexParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            modes: 10,
            delta: 0.3,
            alpha: 1.0,
            amplitude_range: (0.0, 1.0),
            phase_range: (0.0, 2.0 * PI),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelvinHelmholtzParams {
    pub epsilon: f64,
    pub modes: usize,
    pub interfaces: (f64, f64),
    pub amplitude_range: (f64, f64),
    pub phase_range: (f64, f64),
}

impl Default for KelvinHelmholtzParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            modes: 10,
            interfaces: (0.25, 0.75),
            amplitude_range: (0.0, 1.0),
            phase_range: (0.0, 2.0 * PI),
        }
    }
}

fn scale(u: f64, range: (f64, f64)) -> f64 {
    range.0 + (range.1 - range.0) * u
}

/// `Σ_n a^n cos(b^n + 2nπ s)` over consecutive `(a, b)` uniform pairs.
fn fourier_perturbation(pairs: &[f64], s: f64, amp: (f64, f64), phase: (f64, f64)) -> f64 {
    pairs
        .chunks_exact(2)
        .enumerate()
        .map(|(k, ab)| {
            let n = (k + 1) as f64;
            scale(ab[0], amp) * (scale(ab[1], phase) + 2.0 * n * PI * s).cos()
        })
        .sum()
}

/// Shock-vortex state at `x`: a vortex-perturbed left state left of the
/// randomly perturbed interface `x_1 = 1/2 + εY(x_2)`.
pub fn shock_vortex(draw: &Draw, x: [f64; 2], p: &ShockVortexParams) -> Result<EulerState> {
    let gamma = GAMMA;
    let sg = gamma.sqrt();
    let y = fourier_perturbation(&draw.0[..2 * p.modes], x[1], p.amplitude_range, p.phase_range);
    let interface = 0.5 + p.epsilon * y;
    let state = if x[0] < interface {
        let rho = 2.0;
        let (dx, dy) = (x[0] - 0.25, x[1] - 0.5);
        let b = (dx * dx + dy * dy).sqrt() / 0.05;
        let theta = dy.atan2(dx);
        let decay = (p.alpha * (1.0 - b * b)).exp();
        let wx = sg + p.delta * b * decay * theta.sin();
        let wy = sg - p.delta * b * decay * theta.cos();
        let pressure = (1.0 - (gamma - 1.0) * p.delta * p.delta * decay * decay / (4.0 * p.alpha * gamma)) * rho;
        EulerState::from_primitive(rho, [wx, wy], pressure, gamma)
    } else {
        EulerState::from_primitive(1.0 / 1.1, [1.1 * sg, 0.0], 1.0 - 0.1 * gamma, gamma)
    };
    state.map_err(|_| Error::NonphysicalShockVortex)
}

/// Kelvin-Helmholtz state at `x`: the dense inner band between the two
/// perturbed interfaces `I_j = J_j + εY_j(x_1)`.
pub fn kelvin_helmholtz(draw: &Draw, x: [f64; 2], p: &KelvinHelmholtzParams) -> EulerState {
    let (first, second) = draw.0[..4 * p.modes].split_at(2 * p.modes);
    let i1 = p.interfaces.0 + p.epsilon * fourier_perturbation(first, x[0], p.amplitude_range, p.phase_range);
    let i2 = p.interfaces.1 + p.epsilon * fourier_perturbation(second, x[0], p.amplitude_range, p.phase_range);
    let (rho, wx) = if i1 < x[1] && x[1] < i2 { (2.0, -0.5) } else { (1.0, 0.5) };
    EulerState::from_primitive(rho, [wx, 0.0], 2.5, GAMMA).expect("constant KH states are physical")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomInitialData {
    BurgersRiemann { epsilon: f64 },
    ShockVortex(ShockVortexParams),
    KelvinHelmholtz(KelvinHelmholtzParams),
}

impl RandomInitialData {
    pub fn equation(&self) -> Equation {
        match self {
            RandomInitialData::BurgersRiemann { .. } => Equation::Burgers,
            _ => Equation::euler(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            RandomInitialData::BurgersRiemann { .. } => 1,
            _ => 2,
        }
    }

    /// Number of uniforms in one draw.
    pub fn draw_len(&self) -> usize {
        match self {
            RandomInitialData::BurgersRiemann { .. } => 1,
            RandomInitialData::ShockVortex(p) => 2 * p.modes,
            RandomInitialData::KelvinHelmholtz(p) => 4 * p.modes,
        }
    }

    pub fn draw(&self, source: &dyn DrawSource, key: &SampleKey) -> Draw {
        source.draw(key, self.draw_len())
    }

    /// Conserved state at `x` for a given draw.
    pub fn evaluate(&self, draw: &Draw, x: [f64; 2], out: &mut [f64]) -> Result<()> {
        match self {
            RandomInitialData::BurgersRiemann { epsilon } => out[0] = burgers_riemann(draw, x[0], *epsilon),
            RandomInitialData::ShockVortex(p) => out.copy_from_slice(&shock_vortex(draw, x, p)?.to_array()),
            RandomInitialData::KelvinHelmholtz(p) => {
                out.copy_from_slice(&kelvin_helmholtz(draw, x, p).to_array())
            }
        }
        Ok(())
    }

    /// Midpoint evaluation of one draw on `grid`.
    pub fn field_from_draw(&self, draw: &Draw, grid: Grid) -> Result<Field> {
        if grid.dim() != self.dim() {
            return Err(Error::GridMismatch(format!(
                "initial data is {}D, grid is {}D",
                self.dim(),
                grid.dim()
            )));
        }
        Field::from_midpoints(grid, self.equation().ncomp(), |x, out| self.evaluate(draw, x, out))
    }

    pub fn sample_field(&self, source: &dyn DrawSource, key: &SampleKey, grid: Grid) -> Result<Field> {
        self.field_from_draw(&self.draw(source, key), grid)
    }

    /// Upper bound on `‖u_0‖_∞` over all draws and points.
    pub fn bound(&self) -> f64 {
        match self {
            RandomInitialData::BurgersRiemann { .. } => 1.0,
            RandomInitialData::KelvinHelmholtz(_) => 2.5 / (GAMMA - 1.0) + 0.5 * 2.0 * 0.25,
            RandomInitialData::ShockVortex(p) => {
                // max_b b e^{α(1-b^2)} is attained at b = 1/sqrt(2α)
                let peak = (1.0 / (2.0 * p.alpha)).sqrt() * (p.alpha - 0.5).exp();
                let w = GAMMA.sqrt() + p.delta * peak;
                let rho = 2.0;
                let speed2 = 2.0 * w * w;
                (rho / (GAMMA - 1.0) + 0.5 * rho * speed2).max(rho * w)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw_of(values: Vec<f64>) -> Draw {
        Draw(values)
    }

    #[test]
    fn same_key_same_draw_and_roles_share() {
        let rng = CounterRng::new(7);
        let a = rng.draw(&SampleKey::new(2, 5, Role::Fine), 8);
        let b = rng.draw(&SampleKey::new(2, 5, Role::Fine), 8);
        let c = rng.draw(&SampleKey::new(2, 5, Role::Coarse), 8);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(a.0.iter().all(|u| (0.0..1.0).contains(u)));
        let d = rng.draw(&SampleKey::new(1, 5, Role::Fine), 8);
        assert_ne!(a, d);
    }

    #[test]
    fn draws_are_prefix_stable() {
        let rng = CounterRng::new(11);
        let key = SampleKey::new(0, 3, Role::Single);
        assert_eq!(rng.draw(&key, 4).0[..], rng.draw(&key, 10).0[..4]);
    }

    #[test]
    fn neighbouring_indices_are_uncorrelated() {
        let rng = CounterRng::new(2024);
        let n = 10_000;
        let xs: Vec<f64> = (0..=n as u64).map(|k| rng.draw(&SampleKey::new(0, k, Role::Single), 1).0[0]).collect();
        let (a, b) = (&xs[..n], &xs[1..]);
        let ma = a.iter().sum::<f64>() / n as f64;
        let mb = b.iter().sum::<f64>() / n as f64;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn burgers_riemann_examples() {
        let d = draw_of(vec![0.3]);
        assert_eq!(burgers_riemann(&d, 0.25, 0.0), 1.0);
        assert_eq!(burgers_riemann(&d, 0.75, 0.0), 0.0);
        // X = 0.5 puts the jump at 0.55
        let d = draw_of(vec![1.0]);
        assert_eq!(burgers_riemann(&d, 0.54, 0.1), 1.0);
        assert_eq!(burgers_riemann(&d, 0.56, 0.1), 0.0);
    }

    #[test]
    fn burgers_mean_matches_uniform_cdf() {
        let rng = CounterRng::new(99);
        let eps = 0.1;
        let m = 100_000;
        for x in [0.47, 0.5, 0.52] {
            let mean = (0..m as u64)
                .map(|k| burgers_riemann(&rng.draw(&SampleKey::new(0, k, Role::Single), 1), x, eps))
                .sum::<f64>()
                / m as f64;
            let p = (0.5 - (x - 0.5) / eps).clamp(0.0, 1.0);
            let sigma = (p * (1.0 - p) / m as f64).sqrt();
            assert!((mean - p).abs() <= 3.0 * sigma + 1e-12, "x={x} mean={mean} p={p}");
        }
    }

    #[test]
    fn shock_vortex_right_state_is_exact() {
        let p = ShockVortexParams { epsilon: 0.0, ..Default::default() };
        let d = draw_of(vec![0.5; 20]);
        let s = shock_vortex(&d, [0.75, 0.3], &p).unwrap();
        let prim = s.to_primitive(GAMMA).unwrap();
        assert!((prim.density - 1.0 / 1.1).abs() < 1e-15);
        assert!((prim.velocity[0] - 1.1 * 1.4f64.sqrt()).abs() < 1e-14);
        assert_eq!(prim.velocity[1], 0.0);
        assert!((prim.pressure - 0.86).abs() < 1e-14);
    }

    #[test]
    fn shock_vortex_far_from_core_is_unperturbed() {
        let p = ShockVortexParams { epsilon: 0.0, ..Default::default() };
        let d = draw_of(vec![0.5; 20]);
        // b = 0.3 / 0.05 = 6
        let s = shock_vortex(&d, [0.25, 0.8], &p).unwrap();
        let prim = s.to_primitive(GAMMA).unwrap();
        let sg = 1.4f64.sqrt();
        assert_eq!(prim.density, 2.0);
        assert!((prim.velocity[0] - sg).abs() < 1e-8);
        assert!((prim.velocity[1] - sg).abs() < 1e-8);
        assert!((prim.pressure - 2.0).abs() < 1e-8);
    }

    #[test]
    fn zero_amplitudes_leave_interface_at_half() {
        let p = ShockVortexParams::default();
        let mut vals = vec![0.0; 20];
        for k in 0..10 {
            vals[2 * k + 1] = 0.37;
        }
        let d = draw_of(vals);
        let left = shock_vortex(&d, [0.4999, 0.1], &p).unwrap();
        let right = shock_vortex(&d, [0.5, 0.1], &p).unwrap();
        assert_eq!(left.density, 2.0);
        assert!((right.density - 1.0 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn kelvin_helmholtz_unperturbed_states() {
        let p = KelvinHelmholtzParams { epsilon: 0.0, ..Default::default() };
        let d = draw_of(vec![0.5; 40]);
        let inner = kelvin_helmholtz(&d, [0.3, 0.5], &p).to_primitive(GAMMA).unwrap();
        assert_eq!((inner.density, inner.velocity, inner.pressure), (2.0, [-0.5, 0.0], 2.5));
        let outer = kelvin_helmholtz(&d, [0.3, 0.1], &p).to_primitive(GAMMA).unwrap();
        assert_eq!((outer.density, outer.velocity, outer.pressure), (1.0, [0.5, 0.0], 2.5));
    }

    #[test]
    fn kelvin_helmholtz_interfaces_stay_in_band() {
        // default ε m = 1 covers the whole domain, so shrink ε
        let p = KelvinHelmholtzParams { epsilon: 0.01, ..Default::default() };
        let rng = CounterRng::new(5);
        let bound = p.epsilon * p.modes as f64;
        for k in 0..50 {
            let d = rng.draw(&SampleKey::new(0, k, Role::Single), 40);
            for i in 0..20 {
                let x1 = i as f64 / 20.0;
                // outside J_j ± εm the state is fixed
                assert_eq!(kelvin_helmholtz(&d, [x1, 0.25 - bound - 1e-9], &p).density, 1.0);
                assert_eq!(kelvin_helmholtz(&d, [x1, 0.25 + bound + 1e-9], &p).density, 2.0);
                assert_eq!(kelvin_helmholtz(&d, [x1, 0.75 + bound + 1e-9], &p).density, 1.0);
            }
        }
    }

    #[test]
    fn samples_respect_sup_bound() {
        let rng = CounterRng::new(3);
        let variants = [
            RandomInitialData::BurgersRiemann { epsilon: 0.1 },
            RandomInitialData::ShockVortex(Default::default()),
            RandomInitialData::KelvinHelmholtz(Default::default()),
        ];
        for data in variants {
            let grid = Grid::unit(data.dim(), 32).unwrap();
            for k in 0..5 {
                let f = data.sample_field(&rng, &SampleKey::new(0, k, Role::Single), grid).unwrap();
                let sup = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(sup <= data.bound(), "{sup} > {}", data.bound());
            }
        }
    }

    #[test]
    fn fine_and_coarse_jumps_agree_within_a_coarse_cell() {
        let rng = CounterRng::new(17);
        let data = RandomInitialData::BurgersRiemann { epsilon: 0.1 };
        let base = Grid::unit(1, 16).unwrap();
        for k in 0..20 {
            let key = SampleKey::new(3, k, Role::Fine);
            let fine = data.sample_field(&rng, &key, base.at_level(3)).unwrap();
            let coarse = data
                .sample_field(&rng, &SampleKey { role: Role::Coarse, ..key }, base.at_level(2))
                .unwrap();
            let jump = |f: &Field| f.values().iter().filter(|&&v| v == 1.0).count() as f64 * f.grid().dx(0);
            assert!((jump(&fine) - jump(&coarse)).abs() <= base.at_level(2).dx(0));
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_fields() {
        let data = RandomInitialData::KelvinHelmholtz(Default::default());
        let grid = Grid::unit(2, 16).unwrap();
        let key = SampleKey::new(0, 0, Role::Single);
        let mut differ = 0;
        for s in 0..100 {
            let a = data.sample_field(&CounterRng::new(s), &key, grid).unwrap();
            let b = data.sample_field(&CounterRng::new(s + 1000), &key, grid).unwrap();
            if a != b {
                differ += 1;
            }
        }
        assert!(differ >= 99);
    }
}
