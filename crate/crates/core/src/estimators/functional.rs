//! Functionals `⟨ψ, g(u)⟩ = Σ_cells ψ g(u) Δx^d`.

use crate::error::{Error, Result};
use crate::grid::Field;

/// Pointwise observable `g` of the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    Identity { component: usize },
    Square { component: usize },
    /// Legendre polynomial `P_order` of the component after the affine map
    /// `[lower, upper] → [-1, 1]`.
    Legendre { order: u32, component: usize, lower: f64, upper: f64 },
}

impl Observable {
    pub fn component(&self) -> usize {
        match *self {
            Observable::Identity { component }
            | Observable::Square { component }
            | Observable::Legendre { component, .. } => component,
        }
    }

    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        match *self {
            Observable::Identity { component } => u[component],
            Observable::Square { component } => u[component] * u[component],
            Observable::Legendre { order, component, lower, upper } => {
                let s = 2.0 * (u[component] - lower) / (upper - lower) - 1.0;
                legendre(order, s)
            }
        }
    }
}

/// `P_n(s)` by the three-term recurrence.
pub fn legendre(order: u32, s: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, s);
    if order == 0 {
        return prev;
    }
    for n in 1..order {
        let n = f64::from(n);
        let next = ((2.0 * n + 1.0) * s * cur - n * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Spatial test function `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialWeight {
    Constant(f64),
    /// Cell values on some level; moved to the integration grid by
    /// averaging or injection.
    Cells(Field),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub weight: SpatialWeight,
    pub observable: Observable,
}

impl Functional {
    /// `ψ ≡ 1` with `g` the identity on one component.
    pub fn mean_of(component: usize) -> Self {
        Self { weight: SpatialWeight::Constant(1.0), observable: Observable::Identity { component } }
    }

    pub fn new(weight: SpatialWeight, observable: Observable) -> Self {
        Self { weight, observable }
    }

    /// `⟨ψ, g(u)⟩` on the native grid of `u`.
    pub fn apply(&self, u: &Field) -> Result<f64> {
        let comp = self.observable.component();
        if comp >= u.ncomp() {
            return Err(Error::ComponentMismatch { expected: comp + 1, got: u.ncomp() });
        }
        let n = u.ncomp();
        let vol = u.grid().cell_volume();
        let total = match &self.weight {
            SpatialWeight::Constant(c) => {
                c * u.values().chunks_exact(n).map(|cell| self.observable.eval(cell)).sum::<f64>()
            }
            SpatialWeight::Cells(psi) => {
                if !psi.grid().same_family(u.grid()) {
                    return Err(Error::GridMismatch("weight and field live on different domains".into()));
                }
                let psi = psi.to_level(u.grid().level())?;
                u.values()
                    .chunks_exact(n)
                    .zip(psi.values().chunks_exact(psi.ncomp()))
                    .map(|(cell, w)| w[0] * self.observable.eval(cell))
                    .sum::<f64>()
            }
        };
        Ok(total * vol)
    }
}
