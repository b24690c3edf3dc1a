//! Exact solution of the 1D Euler Riemann problem (Toro, ch. 4), used only
//! as a test oracle.

pub const GAMMA: f64 = 1.4;

#[derive(Debug, Clone, Copy)]
pub struct Prim {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl Prim {
    pub fn sound(&self) -> f64 {
        (GAMMA * self.p / self.rho).sqrt()
    }

    /// `(ρ, ρu, 0, E)` in the four-component layout.
    pub fn conserved(&self) -> [f64; 4] {
        [self.rho, self.rho * self.u, 0.0, self.p / (GAMMA - 1.0) + 0.5 * self.rho * self.u * self.u]
    }

    /// Physical x-flux.
    pub fn flux(&self) -> [f64; 4] {
        let e = self.conserved()[3];
        [self.rho * self.u, self.rho * self.u * self.u + self.p, 0.0, self.u * (e + self.p)]
    }
}

/// Pressure function `f_K(p)` and its derivative.
fn pressure_fn(p: f64, s: &Prim) -> (f64, f64) {
    let c = s.sound();
    if p > s.p {
        let a = 2.0 / ((GAMMA + 1.0) * s.rho);
        let b = (GAMMA - 1.0) / (GAMMA + 1.0) * s.p;
        let q = (a / (p + b)).sqrt();
        ((p - s.p) * q, q * (1.0 - 0.5 * (p - s.p) / (b + p)))
    } else {
        let e = (GAMMA - 1.0) / (2.0 * GAMMA);
        let r = p / s.p;
        (2.0 * c / (GAMMA - 1.0) * (r.powf(e) - 1.0), r.powf(-(GAMMA + 1.0) / (2.0 * GAMMA)) / (s.rho * c))
    }
}

/// Star pressure and velocity by Newton iteration.
pub fn star(l: &Prim, r: &Prim) -> (f64, f64) {
    let du = r.u - l.u;
    let mut p = (0.5 * (l.p + r.p)).max(1e-8);
    for _ in 0..100 {
        let (fl, dl) = pressure_fn(p, l);
        let (fr, dr) = pressure_fn(p, r);
        let next = (p - (fl + fr + du) / (dl + dr)).max(1e-12);
        let change = 2.0 * (next - p).abs() / (next + p);
        p = next;
        if change < 1e-15 {
            break;
        }
    }
    let (fl, _) = pressure_fn(p, l);
    let (fr, _) = pressure_fn(p, r);
    (p, 0.5 * (l.u + r.u) + 0.5 * (fr - fl))
}

/// State at similarity coordinate `xi = x/t`.
pub fn sample(l: &Prim, r: &Prim, xi: f64) -> Prim {
    let (ps, us) = star(l, r);
    let g1 = (GAMMA - 1.0) / (GAMMA + 1.0);
    if xi <= us {
        let c = l.sound();
        if ps > l.p {
            let s = l.u - c * ((GAMMA + 1.0) / (2.0 * GAMMA) * ps / l.p + (GAMMA - 1.0) / (2.0 * GAMMA)).sqrt();
            if xi <= s {
                *l
            } else {
                Prim { rho: l.rho * (ps / l.p + g1) / (g1 * ps / l.p + 1.0), u: us, p: ps }
            }
        } else {
            let head = l.u - c;
            let cs = c * (ps / l.p).powf((GAMMA - 1.0) / (2.0 * GAMMA));
            let tail = us - cs;
            if xi <= head {
                *l
            } else if xi >= tail {
                Prim { rho: l.rho * (ps / l.p).powf(1.0 / GAMMA), u: us, p: ps }
            } else {
                let k = 2.0 / (GAMMA + 1.0) + g1 / c * (l.u - xi);
                let k = k.max(0.0);
                Prim {
                    rho: l.rho * k.powf(2.0 / (GAMMA - 1.0)),
                    u: 2.0 / (GAMMA + 1.0) * (c + (GAMMA - 1.0) / 2.0 * l.u + xi),
                    p: l.p * k.powf(2.0 * GAMMA / (GAMMA - 1.0)),
                }
            }
        }
    } else {
        let c = r.sound();
        if ps > r.p {
            let s = r.u + c * ((GAMMA + 1.0) / (2.0 * GAMMA) * ps / r.p + (GAMMA - 1.0) / (2.0 * GAMMA)).sqrt();
            if xi >= s {
                *r
            } else {
                Prim { rho: r.rho * (ps / r.p + g1) / (g1 * ps / r.p + 1.0), u: us, p: ps }
            }
        } else {
            let head = r.u + c;
            let cs = c * (ps / r.p).powf((GAMMA - 1.0) / (2.0 * GAMMA));
            let tail = us + cs;
            if xi >= head {
                *r
            } else if xi <= tail {
                Prim { rho: r.rho * (ps / r.p).powf(1.0 / GAMMA), u: us, p: ps }
            } else {
                let k = (2.0 / (GAMMA + 1.0) - g1 / c * (r.u - xi)).max(0.0);
                Prim {
                    rho: r.rho * k.powf(2.0 / (GAMMA - 1.0)),
                    u: 2.0 / (GAMMA + 1.0) * (-c + (GAMMA - 1.0) / 2.0 * r.u + xi),
                    p: r.p * k.powf(2.0 * GAMMA / (GAMMA - 1.0)),
                }
            }
        }
    }
}

pub const SOD_LEFT: Prim = Prim { rho: 1.0, u: 0.0, p: 1.0 };
pub const SOD_RIGHT: Prim = Prim { rho: 0.125, u: 0.0, p: 0.1 };

/// Cell averages of the Sod density at time `t` on `n` cells of `[0, 1]`
/// with the diaphragm at 1/2.
pub fn sod_density(n: usize, t: f64) -> Vec<f64> {
    super::cell_averages(n, 16, |x| sample(&SOD_LEFT, &SOD_RIGHT, (x - 0.5) / t).rho)
}
