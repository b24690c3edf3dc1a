//! Third-order WENO reconstruction on a three-cell stencil.

const D_NEAR: f64 = 2.0 / 3.0;
const D_FAR: f64 = 1.0 / 3.0;

/// Face values of cell `i` from the averages `(u_{i-1}, u_i, u_{i+1})`.
///
/// Returns `(value at i-1/2, value at i+1/2)`.
#[inline]
pub fn weno3_reconstruct(um: f64, u: f64, up: f64, eps: f64) -> (f64, f64) {
    let beta_left = (u - um) * (u - um);
    let beta_right = (up - u) * (up - u);
    let a_left = 1.0 / ((eps + beta_left) * (eps + beta_left));
    let a_right = 1.0 / ((eps + beta_right) * (eps + beta_right));

    // face i+1/2: central stencil {i, i+1} carries the larger linear weight
    let wl = D_FAR * a_left;
    let wr = D_NEAR * a_right;
    let plus = u + 0.5 * (wl * (u - um) + wr * (up - u)) / (wl + wr);

    // face i-1/2 mirrors it
    let wl = D_NEAR * a_left;
    let wr = D_FAR * a_right;
    let minus = u - 0.5 * (wl * (u - um) + wr * (up - u)) / (wl + wr);

    (minus, plus)
}
