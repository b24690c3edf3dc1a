//! Physical and numerical fluxes.

use super::{Equation, State};

/// Burgers flux `u^2 / 2`.
#[inline]
pub fn flux_burgers(u: f64) -> f64 {
    0.5 * u * u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxKind {
    Rusanov,
    /// Three-wave HLL with a restored contact, using Einfeldt wave speeds.
    /// For scalar equations this is the two-wave HLL flux.
    Hllc,
}

/// Counts interfaces where HLLC could not produce a physical star state.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct FluxStats {
    pub hllc_fallbacks: u64,
}

/// Interface flux between reconstructed `left` and `right` states along `axis`.
pub fn numerical_flux(
    eq: &Equation,
    kind: FluxKind,
    left: &State,
    right: &State,
    axis: usize,
    stats: &mut FluxStats,
) -> State {
    let n = eq.ncomp();
    if left[..n] == right[..n] {
        return eq.flux(left, axis);
    }
    match kind {
        FluxKind::Rusanov => rusanov(eq, left, right, axis),
        FluxKind::Hllc => match eq {
            Equation::Burgers => hll_scalar(left[0], right[0]),
            Equation::Euler { gamma } => match hllc_euler(*gamma, left, right, axis) {
                Some(f) => f,
                None => {
                    stats.hllc_fallbacks += 1;
                    rusanov(eq, left, right, axis)
                }
            },
        },
    }
}

pub fn rusanov(eq: &Equation, left: &State, right: &State, axis: usize) -> State {
    let fl = eq.flux(left, axis);
    let fr = eq.flux(right, axis);
    let a = eq.max_speed(left, axis).max(eq.max_speed(right, axis));
    let mut f = [0.0; 4];
    for c in 0..eq.ncomp() {
        f[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * a * (right[c] - left[c]);
    }
    f
}

/// Local Lax-Friedrichs entropy flux matching [`rusanov`]; the same form is
/// used as the diagnostic entropy flux for every flux kind.
pub fn entropy_flux_numerical(eq: &Equation, left: &State, right: &State, axis: usize) -> f64 {
    let a = eq.max_speed(left, axis).max(eq.max_speed(right, axis));
    0.5 * (eq.entropy_flux(left, axis) + eq.entropy_flux(right, axis))
        - 0.5 * a * (eq.entropy(right) - eq.entropy(left))
}

fn hll_scalar(ul: f64, ur: f64) -> State {
    let sl = ul.min(ur);
    let sr = ul.max(ur);
    let f = if sl >= 0.0 {
        flux_burgers(ul)
    } else if sr <= 0.0 {
        flux_burgers(ur)
    } else {
        (sr * flux_burgers(ul) - sl * flux_burgers(ur) + sl * sr * (ur - ul)) / (sr - sl)
    };
    [f, 0.0, 0.0, 0.0]
}

fn hllc_euler(gamma: f64, left: &State, right: &State, axis: usize) -> Option<State> {
    let tang = 1 - axis;
    let (rl, rr) = (left[0], right[0]);
    let unl = left[1 + axis] / rl;
    let unr = right[1 + axis] / rr;
    let utl = left[1 + tang] / rl;
    let utr = right[1 + tang] / rr;
    let pl = (gamma - 1.0) * (left[3] - 0.5 * rl * (unl * unl + utl * utl));
    let pr = (gamma - 1.0) * (right[3] - 0.5 * rr * (unr * unr + utr * utr));
    if !(rl > 0.0 && rr > 0.0 && pl > 0.0 && pr > 0.0) {
        return None;
    }
    let cl = (gamma * pl / rl).sqrt();
    let cr = (gamma * pr / rr).sqrt();

    // Roe averages for the Einfeldt speed bounds
    let (sql, sqr) = (rl.sqrt(), rr.sqrt());
    let wsum = sql + sqr;
    let un_roe = (sql * unl + sqr * unr) / wsum;
    let ut_roe = (sql * utl + sqr * utr) / wsum;
    let hl = (left[3] + pl) / rl;
    let hr = (right[3] + pr) / rr;
    let h_roe = (sql * hl + sqr * hr) / wsum;
    let c2_roe = (gamma - 1.0) * (h_roe - 0.5 * (un_roe * un_roe + ut_roe * ut_roe));
    if !(c2_roe > 0.0) {
        return None;
    }
    let c_roe = c2_roe.sqrt();
    let sl = (unl - cl).min(un_roe - c_roe);
    let sr = (unr + cr).max(un_roe + c_roe);
    if !(sl < sr) {
        return None;
    }

    let ml = rl * (sl - unl);
    let mr = rr * (sr - unr);
    let denom = ml - mr;
    if denom == 0.0 {
        return None;
    }
    let s_star = (pr - pl + unl * ml - unr * mr) / denom;
    let p_star = pl + ml * (s_star - unl);
    if !(s_star.is_finite() && p_star > 0.0) {
        return None;
    }

    let eq = Equation::Euler { gamma };
    if sl >= 0.0 {
        return Some(eq.flux(left, axis));
    }
    if sr <= 0.0 {
        return Some(eq.flux(right, axis));
    }
    let (state, s_k, un, ut, p, fk) = if s_star >= 0.0 {
        (left, sl, unl, utl, pl, eq.flux(left, axis))
    } else {
        (right, sr, unr, utr, pr, eq.flux(right, axis))
    };
    let rho = state[0];
    let rho_star = rho * (s_k - un) / (s_k - s_star);
    if !(rho_star > 0.0 && rho_star.is_finite()) {
        return None;
    }
    let mut u_star = [0.0; 4];
    u_star[0] = rho_star;
    u_star[1 + axis] = rho_star * s_star;
    u_star[1 + tang] = rho_star * ut;
    u_star[3] = rho_star * (state[3] / rho + (s_star - un) * (s_star + p / (rho * (s_k - un))));
    let mut f = [0.0; 4];
    for c in 0..4 {
        f[c] = fk[c] + s_k * (u_star[c] - state[c]);
    }
    if f.iter().all(|v| v.is_finite()) {
        Some(f)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{EulerState, GAMMA};

    fn euler_state(rho: f64, w: [f64; 2], p: f64) -> State {
        EulerState::from_primitive(rho, w, p, GAMMA).unwrap().to_array()
    }

    #[test]
    fn burgers_flux_values() {
        assert_eq!(flux_burgers(0.0), 0.0);
        assert_eq!(flux_burgers(1.0), 0.5);
        assert_eq!(flux_burgers(-2.0), 2.0);
    }

    #[test]
    fn burgers_rusanov_consistency() {
        let mut stats = FluxStats::default();
        let f = numerical_flux(&Equation::Burgers, FluxKind::Rusanov, &[1.0; 4], &[1.0; 4], 0, &mut stats);
        assert_eq!(f[0], 0.5);
    }

    #[test]
    fn euler_hllc_consistency_at_rest() {
        let mut stats = FluxStats::default();
        let u = euler_state(1.0, [0.0, 0.0], 1.0);
        let f = numerical_flux(&Equation::euler(), FluxKind::Hllc, &u, &u, 0, &mut stats);
        assert_eq!(f, [0.0, 1.0, 0.0, 0.0]);
        let g = numerical_flux(&Equation::euler(), FluxKind::Hllc, &u, &u, 1, &mut stats);
        assert_eq!(g, [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn hllc_stationary_contact_is_exact() {
        // equal pressure and zero velocity: only a stationary contact, flux is (0, p, 0, 0)
        let mut stats = FluxStats::default();
        let l = euler_state(1.0, [0.0, 0.0], 1.0);
        let r = euler_state(0.25, [0.0, 0.0], 1.0);
        let f = numerical_flux(&Equation::euler(), FluxKind::Hllc, &l, &r, 0, &mut stats);
        assert!(f[0].abs() < 1e-14 && (f[1] - 1.0).abs() < 1e-14 && f[3].abs() < 1e-14);
        assert_eq!(stats.hllc_fallbacks, 0);
        // Rusanov smears the same contact
        let g = rusanov(&Equation::euler(), &l, &r, 0);
        assert!(g[0].abs() > 1e-3);
    }

    #[test]
    fn hllc_falls_back_on_invalid_states() {
        let mut stats = FluxStats::default();
        let l = euler_state(1.0, [0.0, 0.0], 1.0);
        let bad = [1.0, 3.0, 0.0, 1.0]; // negative pressure
        let _ = numerical_flux(&Equation::euler(), FluxKind::Hllc, &l, &bad, 0, &mut stats);
        assert_eq!(stats.hllc_fallbacks, 1);
    }

    #[test]
    fn hll_scalar_upwinds() {
        assert_eq!(hll_scalar(2.0, 1.0)[0], 2.0);
        assert_eq!(hll_scalar(-1.0, -2.0)[0], 2.0);
    }
}
