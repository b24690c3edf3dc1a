//! Browser demo: Burgers ensembles and sample planning compiled to
//! WebAssembly. Every export returns a flat `Float64Array`; the layouts are
//! documented per function and decoded by `www/index.html`.

use wasm_bindgen::prelude::*;

use mvmc_core::estimators::{
    mc_estimate, mlmc_estimate, normalize_variances, optimal_samples, work_mc, Ensemble,
};
use mvmc_core::fvm::{Boundary, Equation, FluxKind, SchemeConfig, Solver};
use mvmc_core::metrics::{l1_error, ReferenceSolution};
use mvmc_core::random::{CounterRng, RandomInitialData, Role, SampleKey};
use mvmc_core::{Grid, Workers};

fn burgers_solver(periodic: bool) -> Result<Solver, String> {
    let bc = if periodic { Boundary::Periodic } else { Boundary::Outflow };
    Solver::new(Equation::Burgers, SchemeConfig::first_order(FluxKind::Rusanov, [bc; 2])).map_err(|e| e.to_string())
}

fn ensemble<'a>(data: &'a RandomInitialData, rng: &'a CounterRng, cells: usize, t: f64, periodic: bool) -> Result<Ensemble<'a>, String> {
    Ok(Ensemble {
        data,
        source: rng,
        base: Grid::unit(1, cells).map_err(|e| e.to_string())?,
        solver: burgers_solver(periodic)?,
        final_time: t,
        workers: Workers::serial(),
    })
}

/// Initial and evolved cell values of one Burgers sample:
/// `[u0 (cells), u(t) (cells)]`.
pub fn sample_pair(cells: usize, epsilon: f64, t: f64, seed: u64, index: u64, periodic: bool) -> Result<Vec<f64>, String> {
    let data = RandomInitialData::BurgersRiemann { epsilon };
    let rng = CounterRng::new(seed);
    let ens = ensemble(&data, &rng, cells, t, periodic)?;
    let key = SampleKey::new(0, index, Role::Single);
    let u0 = ens.initial(&key, 0).map_err(|e| e.to_string())?;
    let u = ens.single(&key).map_err(|e| e.to_string())?;
    Ok(u0.values().iter().chain(u.values()).copied().collect())
}

/// MC on the finest level against MLMC with the given plan, both on
/// `base_cells · 2^L` cells at the finest level. Layout:
/// `[exact mean, mc mean, mc variance, mlmc mean, mlmc variance]`, each
/// `base_cells · 2^L` long, then `[mc L1 error, mlmc L1 error]`.
pub fn compare_estimators(
    base_cells: usize,
    epsilon: f64,
    t: f64,
    seed: u64,
    mc_samples: usize,
    plan: &[usize],
) -> Result<Vec<f64>, String> {
    if plan.is_empty() {
        return Err("plan needs at least one level".into());
    }
    let data = RandomInitialData::BurgersRiemann { epsilon };
    let rng = CounterRng::new(seed);
    let ens = ensemble(&data, &rng, base_cells, t, false)?;
    let finest = (plan.len() - 1) as u32;
    let reference = ReferenceSolution::BurgersRiemann { epsilon, periodic: false };
    let exact = reference.mean_field(ens.grid(finest), t).map_err(|e| e.to_string())?;
    let mc = mc_estimate(&ens, mc_samples, finest).and_then(|m| m.field_statistics()).map_err(|e| e.to_string())?;
    let ml = mlmc_estimate(&ens, plan).and_then(|m| m.field_statistics()).map_err(|e| e.to_string())?;
    let err = |f| l1_error(f, &exact).map(|e| e[0]).map_err(|e| e.to_string());
    let errors = [err(&mc.mean)?, err(&ml.mean)?];
    let mut out = Vec::with_capacity(5 * exact.values().len() + 2);
    for f in [&exact, &mc.mean, &mc.variance, &ml.mean, &ml.variance] {
        out.extend_from_slice(f.values());
    }
    out.extend_from_slice(&errors);
    Ok(out)
}

/// Optimal `M_l` for raw level variances `V_0, …, V_L` at tolerance `tau`.
/// Layout: `[M_0, …, M_L, MLMC work, MC work, modeled speedup]`, where MC
/// runs `⌈1/τ²⌉` samples on the finest level.
pub fn plan(variances: &[f64], tau: f64, dim: usize, base_cells: usize) -> Result<Vec<f64>, String> {
    let detail = normalize_variances(variances).map_err(|e| e.to_string())?;
    let plan = optimal_samples(&detail, tau, dim).map_err(|e| e.to_string())?;
    let dx0 = 1.0 / base_cells as f64;
    let work = plan.work(dx0);
    let finest = dx0 / (plan.max_level() as f64).exp2();
    let mc = work_mc((1.0 / (tau * tau)).ceil() as usize, finest, dim);
    let mut out: Vec<f64> = plan.samples.iter().map(|&m| m as f64).collect();
    out.extend([work, mc, mc / work]);
    Ok(out)
}

#[wasm_bindgen(js_name = samplePair)]
pub fn sample_pair_js(cells: usize, epsilon: f64, t: f64, seed: u64, index: u64, periodic: bool) -> Result<Vec<f64>, JsError> {
    sample_pair(cells, epsilon, t, seed, index, periodic).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareEstimators)]
pub fn compare_estimators_js(
    base_cells: usize,
    epsilon: f64,
    t: f64,
    seed: u64,
    mc_samples: usize,
    plan: Vec<u32>,
) -> Result<Vec<f64>, JsError> {
    let plan: Vec<usize> = plan.into_iter().map(|m| m as usize).collect();
    compare_estimators(base_cells, epsilon, t, seed, mc_samples, &plan).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = planSamples)]
pub fn plan_js(variances: Vec<f64>, tau: f64, dim: usize, base_cells: usize) -> Result<Vec<f64>, JsError> {
    plan(&variances, tau, dim, base_cells).map_err(|e| JsError::new(&e))
}
