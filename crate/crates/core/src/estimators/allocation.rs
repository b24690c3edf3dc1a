//! Optimal samples per level and work models.
//!
//! Minimizing `Σ_l M_l 2^{l(d+1)}` subject to
//! `1/√M_0 + Σ_{l≥1} √(V_l / M_l) ≤ τ` with a Lagrange multiplier gives
//!
//! ```text
//! S = 1 + Σ_{l≥1} (2^{l(d+1)} V_l)^{1/3}
//! M_0 = (S / τ)^2
//! M_l = (S / τ)^2 (V_l / 2^{2l(d+1)})^{1/3}
//! ```
//!
//! The level-0 term carries unit weight, so `V_l` must be divided by `V_0`
//! beforehand ([`normalize_variances`]).

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LogLogFit};

/// Sample counts per level together with the inputs they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPlan {
    /// `M_0, …, M_L` after rounding up.
    pub samples: Vec<usize>,
    /// The unrounded optimum.
    pub continuous: Vec<f64>,
    /// Normalized detail variances `V_1/V_0, …, V_L/V_0`.
    pub detail_variances: Vec<f64>,
    pub tau: f64,
    pub dim: usize,
}

impl LevelPlan {
    pub fn max_level(&self) -> usize {
        self.samples.len() - 1
    }

    /// `1/√M_0 + Σ √(V_l / M_l)` for the rounded counts.
    pub fn constraint(&self) -> f64 {
        constraint_value(&self.samples, &self.detail_variances)
    }

    /// `Σ M_l 2^{l(d+1)} Δx_0^{-d-1}`.
    pub fn work(&self, dx0: f64) -> f64 {
        work_mlmc(&self.samples, dx0, self.dim)
    }
}

/// `V_l / V_0` for `l ≥ 1`, from raw variances `V_0, …, V_L`.
pub fn normalize_variances(variances: &[f64]) -> Result<Vec<f64>> {
    let (&v0, rest) = variances
        .split_first()
        .ok_or_else(|| Error::InsufficientData("no level variances".into()))?;
    if !(v0 > 0.0) {
        return Err(Error::InvalidArgument(format!("level-0 variance {v0} must be positive")));
    }
    Ok(rest.iter().map(|v| v.max(0.0) / v0).collect())
}

fn level_cost(level: usize, dim: usize) -> f64 {
    ((level * (dim + 1)) as f64).exp2()
}

/// Rounds up, treating values within 1e-9 relative of an integer as that integer.
fn ceil_count(x: f64) -> usize {
    let r = x.round();
    let c = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x.ceil() };
    (c as usize).max(1)
}

/// Optimal `M_0, …, M_L` for normalized detail variances `V_1, …, V_L`.
pub fn optimal_samples(detail_variances: &[f64], tau: f64, dim: usize) -> Result<LevelPlan> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("tolerance {tau} must be positive")));
    }
    if detail_variances.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("level variances must be finite and nonnegative".into()));
    }
    let s = 1.0
        + detail_variances
            .iter()
            .enumerate()
            .map(|(k, v)| (level_cost(k + 1, dim) * v).cbrt())
            .sum::<f64>();
    let base = (s / tau) * (s / tau);
    let mut continuous = vec![base];
    for (k, v) in detail_variances.iter().enumerate() {
        let c = level_cost(k + 1, dim);
        continuous.push(base * (v / (c * c)).cbrt());
    }
    let samples = continuous.iter().map(|&m| ceil_count(m)).collect();
    Ok(LevelPlan { samples, continuous, detail_variances: detail_variances.to_vec(), tau, dim })
}

pub fn constraint_value(samples: &[usize], detail_variances: &[f64]) -> f64 {
    1.0 / (samples[0] as f64).sqrt()
        + samples[1..]
            .iter()
            .zip(detail_variances)
            .map(|(&m, v)| (v / m as f64).sqrt())
            .sum::<f64>()
}

/// `Δx^{-d-1}`: one finite-volume solve under a CFL-bound step.
pub fn work_fvm(dx: f64, dim: usize) -> f64 {
    dx.powi(-(dim as i32) - 1)
}

pub fn work_mc(samples: usize, dx: f64, dim: usize) -> f64 {
    samples as f64 * work_fvm(dx, dim)
}

pub fn work_mlmc(samples: &[usize], dx0: f64, dim: usize) -> f64 {
    samples.iter().enumerate().map(|(l, &m)| m as f64 * level_cost(l, dim)).sum::<f64>() * work_fvm(dx0, dim)
}

/// `W_2 / W_1`.
pub fn speedup(w1: f64, w2: f64) -> f64 {
    w2 / w1
}

/// Slope `q` of `ln V_l` against `ln Δx_l` over the positive variances.
pub fn fit_decay_rate(variances: &[f64], dxs: &[f64]) -> Result<LogLogFit> {
    let (x, v): (Vec<f64>, Vec<f64>) = dxs
        .iter()
        .zip(variances)
        .filter(|(_, v)| **v > 0.0)
        .map(|(dx, v)| (*dx, *v))
        .unzip();
    if v.len() < 2 {
        return Err(Error::InsufficientData(format!("{} positive variance(s)", v.len())));
    }
    loglog_fit(&x, &v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_tolerance() {
        let plan = optimal_samples(&[], 0.1, 1).unwrap();
        assert_eq!(plan.samples, vec![100]);
    }

    #[test]
    fn closed_form_two_levels() {
        let plan = optimal_samples(&[0.25], 0.1, 1).unwrap();
        assert_eq!(plan.continuous, vec![400.0, 100.0]);
        assert_eq!(plan.samples, vec![400, 100]);
        assert!((plan.work(1.0) - 800.0).abs() < 1e-12);
        assert!(plan.constraint() <= 0.1 + 1e-15);
    }

    #[test]
    fn zero_variance_levels_get_one_sample() {
        let plan = optimal_samples(&[0.0, 0.0], 0.5, 2).unwrap();
        assert_eq!(plan.samples, vec![4, 1, 1]);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(optimal_samples(&[0.1], 0.0, 1).is_err());
        assert!(optimal_samples(&[0.1], -1.0, 1).is_err());
    }

    #[test]
    fn work_examples() {
        assert_eq!(work_mc(1, 1.0, 1), 1.0);
        assert_eq!(work_mlmc(&[400, 100], 0.5, 1), 800.0 * 4.0);
        assert_eq!(speedup(2.0, 8.0), 4.0);
    }

    #[test]
    fn mlmc_beats_mc_when_variances_decay() {
        let (dim, levels, dx0) = (1usize, 6usize, 1.0 / 16.0);
        let dxs: Vec<f64> = (0..=levels).map(|l| dx0 / (1u32 << l) as f64).collect();
        let detail: Vec<f64> = dxs[1..].iter().map(|dx| dx / dxs[0]).collect();
        let tau = 0.01;
        let plan = optimal_samples(&detail, tau, dim).unwrap();
        let mc = work_mc((1.0 / (tau * tau)).ceil() as usize, dxs[levels], dim);
        assert!(plan.work(dx0) < mc);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_variances(&[2.0, 1.0, 0.5]).unwrap(), vec![0.5, 0.25]);
        assert!(normalize_variances(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn decay_rate_fits() {
        let dxs = [0.1, 0.05, 0.025, 0.0125];
        assert!((fit_decay_rate(&dxs, &dxs).unwrap().slope - 1.0).abs() < 1e-12);
        assert!(fit_decay_rate(&[2.0; 4], &dxs).unwrap().slope.abs() < 1e-12);
        assert!(fit_decay_rate(&[1.0, 0.0, 0.0, 0.0], &dxs).is_err());
    }
}
