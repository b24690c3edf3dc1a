//! Subcommand implementations over one resolved configuration.

use std::path::Path;

use mvmc_core::estimators::{
    estimate_level_variances_coupled, fit_decay_rate, mc_estimate, mlmc_estimate, normalize_variances,
    optimal_samples, work_mc, work_mlmc, Coupling, Ensemble, Functional, SignedEmpiricalMeasure, SpatialWeight,
};
use mvmc_core::fvm::{entropy_residual, positive_entropy_mass, weak_bv_sum, Boundary, Solver, Trajectory};
use mvmc_core::metrics::{l1_error, wasserstein_to_dirac, ReferenceSolution};
use mvmc_core::random::{CounterRng, RandomInitialData, Role, SampleKey};
use mvmc_core::relaxation::{relaxed_mlmc_estimate, BiasReport};
use mvmc_core::{Field, Grid};

use crate::config::{ExperimentConfig, Mode, ReferenceName};
use crate::output::{column, latest_field, num, read_csv, RunDir};
use crate::Failure;

const FUNCTIONALS_HEADER: [&str; 7] =
    ["run", "method", "functional", "value", "std_error", "relaxation_bias", "relaxation_noise"];
const PLAN_HEADER: [&str; 4] = ["run", "level", "samples", "work"];
const VARIANCES_HEADER: [&str; 6] = ["run", "level", "dx", "functional", "variance", "mean"];
const ERRORS_HEADER: [&str; 7] = ["run", "method", "dx", "work", "samples", "metric", "value"];
const DIAGNOSTICS_HEADER: [&str; 9] =
    ["run", "t", "mass_0", "mass_1", "mass_2", "mass_3", "weak_bv", "entropy_pos_mass", "sample"];
const FAILURES_HEADER: [&str; 5] = ["run", "level", "index", "role", "message"];
const PLOT_HEADER: [&str; 5] = ["run", "series", "metric", "x", "y"];

/// Exponent of the weak-BV sum.
const WEAK_BV_R: f64 = 2.0;

pub struct Context {
    cfg: ExperimentConfig,
    data: RandomInitialData,
    rng: CounterRng,
    solver: Solver,
    base: Grid,
    functionals: Vec<Functional>,
    dir: RunDir,
    summary: Vec<String>,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, Failure> {
        let data = cfg.initial_data()?;
        let solver = cfg.solver()?;
        let base = cfg.base_grid()?;
        let functionals = cfg.functionals()?;
        let dir = RunDir::open(&cfg.output_dir())?;
        let rng = CounterRng::new(cfg.seed());
        Ok(Self { cfg, data, rng, solver, base, functionals, dir, summary: Vec::new() })
    }

    fn ensemble(&self) -> Ensemble<'_> {
        Ensemble {
            data: &self.data,
            source: &self.rng,
            base: self.base,
            solver: self.solver,
            final_time: self.cfg.final_time,
            workers: self.cfg.workers(),
        }
    }

    fn say(&mut self, line: String) {
        println!("{line}");
        self.summary.push(line);
    }

    pub fn finish(&self, command: &str, status: &str) -> Result<(), Failure> {
        self.dir.finish(command, status, &self.cfg, &self.summary)
    }

    /// Records failed sample keys before handing the failure on.
    fn record_failures<T>(&mut self, result: mvmc_core::Result<T>) -> Result<T, Failure> {
        match result {
            Err(mvmc_core::Error::SampleFailures(list)) => {
                let rows: Vec<Vec<String>> = list
                    .iter()
                    .map(|(k, msg)| {
                        vec![
                            self.dir.id.clone(),
                            k.level.to_string(),
                            k.index.to_string(),
                            format!("{:?}", k.role).to_lowercase(),
                            msg.clone(),
                        ]
                    })
                    .collect();
                self.dir.append_csv("failures.csv", &FAILURES_HEADER, &rows)?;
                Err(Failure::Samples(list))
            }
            other => Ok(other?),
        }
    }

    fn periodic(&self) -> bool {
        self.solver.scheme.boundary[0] == Boundary::Periodic
    }

    fn reference(&self) -> Option<ReferenceSolution> {
        match (self.cfg.reference, self.data) {
            (Some(ReferenceName::Analytic), RandomInitialData::BurgersRiemann { epsilon }) => {
                Some(ReferenceSolution::BurgersRiemann { epsilon, periodic: self.periodic() })
            }
            _ => None,
        }
    }

    /// Rejects analytic references the final time has outrun before any compute.
    fn check_reference(&self) -> Result<(), Failure> {
        if let Some(r) = self.reference() {
            r.mean_field(self.base, self.cfg.final_time)
                .map_err(|e| Failure::Config(format!("analytic reference unavailable: {e}")))?;
        }
        Ok(())
    }

    pub fn run_mc(&mut self, level: Option<u32>, diagnostics: bool) -> Result<(), Failure> {
        let m = self.cfg.mc_samples.ok_or_else(|| Failure::Config("run-mc needs mc_samples".into()))?;
        let level = level.unwrap_or(self.cfg.levels);
        self.check_reference()?;
        if diagnostics {
            self.diagnostics(Some(level), 0)?;
        }
        let result = mc_estimate(&self.ensemble(), m, level);
        let measure = self.record_failures(result)?;
        let dx = self.ensemble().dx(level);
        let work = work_mc(m, dx, self.cfg.dim());
        let plan_rows = vec![vec![self.dir.id.clone(), level.to_string(), m.to_string(), num(work)]];
        self.report("mc", &measure, None, plan_rows, dx, work, m.to_string())
    }

    /// Samples per level: `--plan`, then `samples`, then `tau` with the latest
    /// variances.csv of the run directory.
    fn mlmc_samples(&self, plan: Option<&Path>) -> Result<Vec<usize>, Failure> {
        if let Some(path) = plan {
            let (header, rows) = read_csv(path)?;
            let (run, level, samples) =
                (column(&header, "run", path)?, column(&header, "level", path)?, column(&header, "samples", path)?);
            let latest = rows.iter().map(|r| r[run].clone()).max().ok_or_else(|| {
                Failure::Config(format!("{} holds no plan", path.display()))
            })?;
            let mut plan: Vec<(u32, usize)> = rows
                .iter()
                .filter(|r| r[run] == latest)
                .map(|r| Ok((parse(&r[level], path)?, parse(&r[samples], path)?)))
                .collect::<Result<_, Failure>>()?;
            plan.sort_unstable();
            if plan.iter().enumerate().any(|(k, (l, _))| *l as usize != k) {
                return Err(Failure::Config(format!("{} levels are not 0..L", path.display())));
            }
            return Ok(plan.into_iter().map(|p| p.1).collect());
        }
        if let Some(s) = &self.cfg.samples {
            return Ok(s.clone());
        }
        if let Some(tau) = self.cfg.tau {
            let path = self.dir.path("variances.csv");
            if path.exists() {
                return Ok(self.plan_from(&path, 0, tau)?.samples);
            }
        }
        Err(Failure::Config("run-mlmc needs --plan, samples, or tau with a prior estimate-variances".into()))
    }

    pub fn run_mlmc(&mut self, plan: Option<&Path>, diagnostics: bool) -> Result<(), Failure> {
        let samples = self.mlmc_samples(plan)?;
        self.check_reference()?;
        let finest = (samples.len() - 1) as u32;
        if diagnostics {
            self.diagnostics(Some(finest), 0)?;
        }
        let (method, measure, bias) = match self.cfg.mode() {
            Mode::Mc => return Err(Failure::Config("mode = \"mc\"; use run-mc".into())),
            Mode::Mlmc => {
                let result = mlmc_estimate(&self.ensemble(), &samples);
                ("mlmc", self.record_failures(result)?, None)
            }
            Mode::MlmcRelaxed => {
                let relax = self.cfg.relaxation()?;
                let result = relaxed_mlmc_estimate(&self.ensemble(), &samples, &relax, &self.functionals);
                let (measure, reports) = self.record_failures(result)?;
                ("mlmc-relaxed", measure, Some(reports))
            }
        };
        let dim = self.cfg.dim();
        let dx0 = self.base.dx0();
        let plan_rows = samples
            .iter()
            .enumerate()
            .map(|(l, &m)| {
                vec![self.dir.id.clone(), l.to_string(), m.to_string(), num(work_mlmc(&level_only(l, m), dx0, dim))]
            })
            .collect();
        let work = work_mlmc(&samples, dx0, dim);
        let dx = self.ensemble().dx(finest);
        let label = samples.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        self.report(method, &measure, bias.as_deref(), plan_rows, dx, work, label)
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &mut self,
        method: &str,
        measure: &SignedEmpiricalMeasure,
        bias: Option<&[BiasReport]>,
        plan_rows: Vec<Vec<String>>,
        dx: f64,
        work: f64,
        samples: String,
    ) -> Result<(), Failure> {
        let id = self.dir.id.clone();
        let stats = measure.field_statistics()?;
        self.dir.write_field("mean", &stats.mean)?;
        self.dir.write_field("variance", &stats.variance)?;
        self.dir.append_csv("plan.csv", &PLAN_HEADER, &plan_rows)?;

        let mut rows = Vec::new();
        for (k, f) in self.functionals.iter().enumerate() {
            let value = measure.functional_value(f)?;
            let err = measure.functional_std_error(f)?;
            let (b, n) = bias.map_or((String::new(), String::new()), |b| (num(b[k].bias), num(b[k].noise)));
            rows.push(vec![id.clone(), method.to_string(), k.to_string(), num(value), num(err), b, n]);
        }
        self.dir.append_csv("functionals.csv", &FUNCTIONALS_HEADER, &rows)?;
        for r in &rows {
            self.say(format!("functional {}: {} ± {}", r[2], r[3], r[4]));
        }
        if let Some(b) = bias {
            for (k, rep) in b.iter().enumerate() {
                self.say(format!("functional {k}: relaxation bias {} (noise {})", rep.bias, rep.noise));
            }
        }

        if let Some(reference) = self.reference() {
            let grid = *stats.mean.grid();
            let t = self.cfg.final_time;
            let exact_mean = reference.mean_field(grid, t)?;
            let l1 = l1_error(&stats.mean, &exact_mean)?[0];
            let dirac = reference.dirac_field(grid, t)?;
            let w1 = wasserstein_to_dirac(measure, &dirac, &SpatialWeight::Constant(1.0))?[0];
            let row = |metric: &str, value: f64| {
                vec![id.clone(), method.to_string(), num(dx), num(work), samples.clone(), metric.to_string(), num(value)]
            };
            let rows = vec![row("l1_mean", l1), row("w1_dirac", w1)];
            self.dir.append_csv("errors.csv", &ERRORS_HEADER, &rows)?;
            self.say(format!("L1 error of the mean {l1}, W1 to the Dirac solution {w1}"));
        }
        Ok(())
    }

    pub fn estimate_variances(&mut self) -> Result<(), Failure> {
        let probe = self.cfg.probe_samples.unwrap_or(16);
        let coupling = match self.cfg.mode() {
            Mode::MlmcRelaxed => Coupling::Relaxed(self.cfg.relaxation()?),
            _ => Coupling::Standard,
        };
        let result =
            estimate_level_variances_coupled(&self.ensemble(), probe, self.cfg.levels, &self.functionals, coupling);
        let levels = self.record_failures(result)?;
        let id = self.dir.id.clone();
        let mut rows = Vec::new();
        for lv in &levels {
            for k in 0..self.functionals.len() {
                rows.push(vec![
                    id.clone(),
                    lv.level.to_string(),
                    num(lv.dx),
                    k.to_string(),
                    num(lv.variance[k]),
                    num(lv.mean[k]),
                ]);
            }
        }
        self.dir.append_csv("variances.csv", &VARIANCES_HEADER, &rows)?;
        for k in 0..self.functionals.len() {
            let v: Vec<f64> = levels.iter().map(|l| l.variance[k]).collect();
            let dx: Vec<f64> = levels.iter().map(|l| l.dx).collect();
            let mut line = format!("functional {k}: V_l = {v:?}");
            if levels.len() >= 3 {
                match fit_decay_rate(&v[1..], &dx[1..]) {
                    Ok(fit) => line.push_str(&format!(", fitted q = {}", fit.slope)),
                    Err(e) => line.push_str(&format!(", no fit ({e})")),
                }
            }
            self.say(line);
        }
        Ok(())
    }

    fn plan_from(&self, path: &Path, functional: usize, tau: f64) -> Result<mvmc_core::estimators::LevelPlan, Failure> {
        let (header, rows) = read_csv(path)?;
        let run = column(&header, "run", path)?;
        let level = column(&header, "level", path)?;
        let fcol = column(&header, "functional", path)?;
        let var = column(&header, "variance", path)?;
        let latest = rows
            .iter()
            .map(|r| r[run].clone())
            .max()
            .ok_or_else(|| Failure::Config(format!("{} holds no variances", path.display())))?;
        let mut v: Vec<(u32, f64)> = Vec::new();
        for r in rows.iter().filter(|r| r[run] == latest) {
            if parse::<usize>(&r[fcol], path)? == functional {
                v.push((parse(&r[level], path)?, parse(&r[var], path)?));
            }
        }
        v.sort_by_key(|p| p.0);
        if v.is_empty() || v.iter().enumerate().any(|(k, (l, _))| *l as usize != k) {
            return Err(Failure::Config(format!(
                "{}: functional {functional} of {latest} lacks levels 0..L",
                path.display()
            )));
        }
        let raw: Vec<f64> = v.into_iter().map(|p| p.1).collect();
        let detail = normalize_variances(&raw)?;
        Ok(optimal_samples(&detail, tau, self.cfg.dim())?)
    }

    pub fn plan_samples(&mut self, tau: Option<f64>, variances: Option<&Path>, functional: usize) -> Result<(), Failure> {
        let tau = tau
            .or(self.cfg.tau)
            .ok_or_else(|| Failure::Config("plan-samples needs --tau or tau".into()))?;
        let default = self.dir.path("variances.csv");
        let path = variances.unwrap_or(&default);
        let plan = self.plan_from(path, functional, tau)?;
        let dx0 = self.base.dx0();
        let dim = self.cfg.dim();
        let id = self.dir.id.clone();
        let rows: Vec<Vec<String>> = plan
            .samples
            .iter()
            .enumerate()
            .map(|(l, &m)| vec![id.clone(), l.to_string(), m.to_string(), num(work_mlmc(&level_only(l, m), dx0, dim))])
            .collect();
        self.dir.append_csv("plan.csv", &PLAN_HEADER, &rows)?;
        let finest = self.base.at_level(plan.max_level() as u32).dx0();
        let mc_samples = (1.0 / (tau * tau)).ceil() as usize;
        let speedup = work_mc(mc_samples, finest, dim) / plan.work(dx0);
        self.say(format!("M_l = {:?}, constraint {} <= tau {tau}", plan.samples, plan.constraint()));
        self.say(format!("work {}, modeled speedup over MC with {mc_samples} samples {speedup}", plan.work(dx0)));
        Ok(())
    }

    pub fn compare(&mut self, reference: Option<&Path>) -> Result<(), Failure> {
        let out = self.cfg.output_dir();
        let (run, mean) = latest_field(&out, "mean")?;
        let (_, variance) = latest_field(&out, "variance")?;
        let id = self.dir.id.clone();
        let dx = mean.grid().min_dx();
        let mut rows = Vec::new();
        let label = match reference {
            Some(dir) => {
                let (ref_run, ref_mean) = latest_field(dir, "mean")?;
                let (_, ref_var) = latest_field(dir, "variance")?;
                let (a, b) = on_common_level(&mean, &ref_mean)?;
                let (va, vb) = on_common_level(&variance, &ref_var)?;
                let label = format!("{run} vs {}:{ref_run}", dir.display());
                for (c, e) in l1_error(&a, &b)?.into_iter().enumerate() {
                    rows.push((format!("l1_mean_{c}"), e));
                }
                for (c, e) in l1_error(&va, &vb)?.into_iter().enumerate() {
                    rows.push((format!("l1_variance_{c}"), e));
                }
                label
            }
            None => {
                let reference = self
                    .reference()
                    .ok_or_else(|| Failure::Config("compare needs --reference or reference = \"analytic\"".into()))?;
                let exact = reference.mean_field(*mean.grid(), self.cfg.final_time)?;
                rows.push(("l1_mean_0".to_string(), l1_error(&mean, &exact)?[0]));
                format!("{run} vs analytic")
            }
        };
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|(metric, v)| {
                vec![id.clone(), "compare".into(), num(dx), String::new(), label.clone(), metric.clone(), num(*v)]
            })
            .collect();
        self.dir.append_csv("errors.csv", &ERRORS_HEADER, &csv_rows)?;
        for (metric, v) in rows {
            self.say(format!("{label}: {metric} = {v}"));
        }
        Ok(())
    }

    /// One sample's trajectory: cumulative mass, weak-BV sum and positive
    /// entropy production after every step.
    pub fn diagnostics(&mut self, level: Option<u32>, sample: u64) -> Result<(), Failure> {
        let level = level.unwrap_or(self.cfg.levels);
        let key = SampleKey::new(level, sample, Role::Single);
        let ens = self.ensemble();
        let traced = ens.initial(&key, level).and_then(|u0| Trajectory::record(&self.solver, &u0, self.cfg.final_time));
        let traj = self.record_failures(traced.map_err(|e| mvmc_core::Error::SampleFailures(vec![(key, e.to_string())])))?;
        let residuals = entropy_residual(&traj);
        let id = self.dir.id.clone();
        let label = format!("level {level} sample {sample}");
        let (mut bv, mut ent) = (0.0, 0.0);
        let mut rows = Vec::new();
        let row = |t: f64, field: &Field, bv: f64, ent: f64| {
            let mass = field.integral();
            let mut r = vec![id.clone(), num(t)];
            r.extend((0..4).map(|c| mass.get(c).map_or(String::new(), |m| num(*m))));
            r.extend([num(bv), num(ent), label.clone()]);
            r
        };
        for (k, snap) in traj.snapshots.iter().enumerate() {
            rows.push(row(snap.time, &snap.field, bv, ent));
            let step = Trajectory { equation: traj.equation, snapshots: vec![snap.clone()], last: traj.last.clone() };
            bv += weak_bv_sum(&step, WEAK_BV_R, 0);
            ent += positive_entropy_mass(&step, &residuals[k..=k]);
        }
        rows.push(row(self.cfg.final_time, &traj.last, bv, ent));
        self.dir.append_csv("diagnostics.csv", &DIAGNOSTICS_HEADER, &rows)?;
        self.say(format!(
            "{label}: {} steps, weak-BV sum {bv}, positive entropy production {ent}",
            traj.snapshots.len()
        ));
        Ok(())
    }

    /// Work-error pairs from errors.csv and Δx-variance pairs from
    /// variances.csv, both for log-log axes.
    pub fn emit_plot_data(&mut self) -> Result<(), Failure> {
        let id = self.dir.id.clone();
        let mut rows = Vec::new();
        let errors = self.dir.path("errors.csv");
        if errors.exists() {
            let (h, data) = read_csv(&errors)?;
            let (method, work, metric, value) =
                (column(&h, "method", &errors)?, column(&h, "work", &errors)?, column(&h, "metric", &errors)?, column(&h, "value", &errors)?);
            for r in data.iter().filter(|r| !r[work].is_empty()) {
                rows.push(vec![id.clone(), r[method].clone(), r[metric].clone(), r[work].clone(), r[value].clone()]);
            }
        }
        let variances = self.dir.path("variances.csv");
        if variances.exists() {
            let (h, data) = read_csv(&variances)?;
            let (run, level, dx, f, v) = (
                column(&h, "run", &variances)?,
                column(&h, "level", &variances)?,
                column(&h, "dx", &variances)?,
                column(&h, "functional", &variances)?,
                column(&h, "variance", &variances)?,
            );
            for r in data.iter().filter(|r| r[level] != "0") {
                let series = format!("variance:{}", r[run]);
                rows.push(vec![id.clone(), series, format!("functional_{}", r[f]), r[dx].clone(), r[v].clone()]);
            }
        }
        if rows.is_empty() {
            return Err(Failure::Config("no errors.csv or variances.csv to plot".into()));
        }
        let n = rows.len();
        self.dir.append_csv("plot-data.csv", &PLOT_HEADER, &rows)?;
        self.say(format!("{n} plot points"));
        Ok(())
    }
}

/// Plan vector with `m` samples on level `l` only, for per-level work.
fn level_only(l: usize, m: usize) -> Vec<usize> {
    let mut v = vec![0; l + 1];
    v[l] = m;
    v
}

fn parse<T: std::str::FromStr>(s: &str, path: &Path) -> Result<T, Failure> {
    s.parse().map_err(|_| Failure::Config(format!("{}: cannot parse {s:?}", path.display())))
}

/// Both fields on the finer of their two levels.
fn on_common_level(a: &Field, b: &Field) -> Result<(Field, Field), Failure> {
    if !a.grid().same_family(b.grid()) {
        return Err(Failure::Config("compared fields live on different domains".into()));
    }
    let level = a.grid().level().max(b.grid().level());
    Ok((a.to_level(level)?, b.to_level(level)?))
}
