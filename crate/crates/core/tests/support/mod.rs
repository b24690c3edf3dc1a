//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

pub mod riemann;

use std::sync::Mutex;

use mvmc_core::random::{Draw, DrawSource, SampleKey};

/// Wraps a draw source and records every key it is asked for.
pub struct RecordingSource<S> {
    pub inner: S,
    pub keys: Mutex<Vec<(SampleKey, Vec<f64>)>>,
}

impl<S: DrawSource> RecordingSource<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, keys: Mutex::new(Vec::new()) }
    }
}

impl<S: DrawSource> DrawSource for RecordingSource<S> {
    fn draw(&self, key: &SampleKey, len: usize) -> Draw {
        let d = self.inner.draw(key, len);
        self.keys.lock().unwrap().push((*key, d.0.clone()));
        d
    }
}

/// Exact entropy solution of one unit-step Burgers sample with jump at `s`,
/// by following characteristics. The jump moves at the Rankine-Hugoniot
/// speed `(1 + 0)/2`; on the periodic domain the seam at 0 additionally
/// opens a rarefaction `u = x/t`.
pub fn burgers_exact(s: f64, t: f64, x: f64, periodic: bool) -> f64 {
    if periodic && t > 0.0 && x < t {
        x / t
    } else if x < s + t / 2.0 {
        1.0
    } else {
        0.0
    }
}

/// Cell averages of `f` by composite Gauss-Legendre quadrature with `sub`
/// subintervals per cell.
pub fn cell_averages(n: usize, sub: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let g = 0.5 / 3f64.sqrt();
    let h = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for k in 0..sub {
                let a = i as f64 * h + k as f64 * h / sub as f64;
                let w = h / sub as f64;
                acc += 0.5 * (f(a + (0.5 - g) * w) + f(a + (0.5 + g) * w));
            }
            acc / sub as f64
        })
        .collect()
}

/// `E[u(x,t)]` over the jump `s = 1/2 + εX`, `X` uniform on `[-1/2, 1/2]`:
/// the probability that the shock has not yet passed `x`.
pub fn burgers_expected(epsilon: f64, t: f64, x: f64, periodic: bool) -> f64 {
    if periodic && t > 0.0 && x < t {
        return x / t;
    }
    if epsilon == 0.0 {
        return burgers_exact(0.5, t, x, periodic);
    }
    // u = 1 iff X > (x - t/2 - 1/2) / ε
    let threshold = (x - t / 2.0 - 0.5) / epsilon;
    (0.5 - threshold).clamp(0.0, 1.0)
}

/// Sample mean and unbiased sample variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Jump location `1/2 + ε(u - 1/2)` of a Burgers sample from its draw.
pub fn burgers_jump(epsilon: f64, draw: &[f64]) -> f64 {
    0.5 + epsilon * (draw[0] - 0.5)
}

/// `∫_0^1 u(x,t)^2 dx` of the exact Burgers sample: the length `s + t/2`
/// of the plateau, less `t - ∫_0^t (x/t)^2 = 2t/3` over a periodic fan.
pub fn burgers_square_integral(s: f64, t: f64, periodic: bool) -> f64 {
    let plateau = s + t / 2.0;
    if periodic {
        plateau - 2.0 * t / 3.0
    } else {
        plateau
    }
}
