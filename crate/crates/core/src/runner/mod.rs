//! Experiment orchestration: grid sweeps dispatched to a worker pool,
//! records ordered by grid index, power-law fits over converged records.

pub mod config;
pub mod fit;
pub mod record;
pub mod validate;

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{expect, interior_weight, ladder_ops, variance, Propagator};
use crate::models::{build, build_qrm_effective, qrm_full_min_cutoff, ModelKind, ModelParams};
use crate::openquantum::{noisy_inverted_variance, NoiseSpec};
use crate::protocols::{delta_g, inverted_variance_full, inverted_variance_quadrature, loschmidt, susceptibility, QUBIT_DOWN};
use crate::qfi::{qfi_analytic, qfi_fidelity_exact};
use crate::truncation::{converge, CutoffPolicy, Sample, EDGE_FRACTION};

pub use config::{Experiment, ExperimentConfig, Grid, Output, OutputFormat, TimeSpec};
pub use fit::{fit_powerlaw, fit_records, ScalingFit};
pub use record::{emit, read_csv, write_records, SweepRecord, COLUMNS};
pub use validate::{validate, Check};

#[derive(Clone, Debug, PartialEq)]
pub struct PointFailure {
    pub index: usize,
    pub param: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub label: String,
    pub fit: ScalingFit,
}

/// Optimal working point of the finite-`η` homodyne protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Optimum {
    pub eta: f64,
    pub g_o: f64,
    pub delta: f64,
    pub inv_var: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<PointFailure>,
    pub fits: Vec<FitReport>,
    pub optima: Vec<Optimum>,
    pub checks: Vec<Check>,
}

impl RunOutput {
    /// All grid points and checks succeeded.
    pub fn success(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug)]
enum Task {
    Quadrature { g: f64 },
    Full { g: f64, eta: f64 },
    Loschmidt { g: f64 },
    Qfi { p: f64 },
    Noise { g: f64, eta: f64, noise: NoiseSpec },
}

impl Task {
    fn param(&self) -> f64 {
        match *self {
            Task::Quadrature { g } | Task::Full { g, .. } | Task::Loschmidt { g } | Task::Noise { g, .. } => g,
            Task::Qfi { p } => p,
        }
    }
}

fn tasks(c: &ExperimentConfig) -> Vec<Task> {
    let grid = c.grid.values();
    match c.experiment {
        Experiment::Quadrature => match c.model.eta.first() {
            Some(&eta) => grid.iter().map(|&g| Task::Full { g, eta }).collect(),
            None => grid.iter().map(|&g| Task::Quadrature { g }).collect(),
        },
        Experiment::Loschmidt => grid.iter().map(|&g| Task::Loschmidt { g }).collect(),
        Experiment::Qfi => grid.iter().map(|&p| Task::Qfi { p }).collect(),
        Experiment::FiniteEta => {
            c.model.eta.iter().flat_map(|&eta| grid.iter().map(move |&g| Task::Full { g, eta })).collect()
        }
        Experiment::Noise => {
            let specs = c.noise.specs().unwrap_or_default();
            let mut out = Vec::new();
            for noise in specs {
                for &eta in &c.model.eta {
                    out.extend(grid.iter().map(|&g| Task::Noise { g, eta, noise }));
                }
            }
            out
        }
        Experiment::Validate => Vec::new(),
    }
}

fn gap_time(spec: TimeSpec, delta: f64, omega: f64) -> Result<f64> {
    match spec {
        TimeSpec::Fixed(t) => Ok(t),
        TimeSpec::Periods(k) => {
            if !(delta > 0.0) {
                return Err(Error::ImaginaryGap { delta });
            }
            Ok(2.0 * PI * k / (delta.sqrt() * omega))
        }
    }
}

fn qfi_params(c: &ExperimentConfig, p: f64) -> ModelParams {
    let m = &c.model;
    match m.kind {
        ModelKind::QrmFull => ModelParams::QrmFull { omega: m.omega, eta: m.eta.first().copied().unwrap_or(1e3), g: p },
        ModelKind::QrmEffective => ModelParams::QrmEffective { omega: m.omega, g: p },
        ModelKind::Opo => ModelParams::Opo { omega: p, kappa: m.kappa },
        ModelKind::Lmg => ModelParams::Lmg { gamma: m.gamma, lambda: p },
    }
}

/// Homodyne statistics of `X`, the exact QFI and (where defined) the
/// analytic QFI for a critical model at its physical parameter `p`.
fn qfi_point(c: &ExperimentConfig, p: f64) -> Result<SweepRecord> {
    let params = qfi_params(c, p);
    struct Point {
        time: f64,
        delta: f64,
        mean: f64,
        variance: f64,
        chi: f64,
        exact: f64,
        analytic: Option<f64>,
    }
    let policy = match params {
        ModelParams::QrmFull { eta, g, .. } => c.cutoff.at_least(qrm_full_min_cutoff(eta, g)),
        _ => c.cutoff,
    };
    let run = converge(policy, |cutoff| {
        let model = build(params, cutoff)?;
        let space = model.space();
        let delta = match model.kind() {
            ModelKind::QrmFull => delta_g(p) * c.model.omega * c.model.omega,
            _ => model.delta()?,
        };
        let time = match c.time {
            TimeSpec::Fixed(t) => t,
            TimeSpec::Periods(k) => gap_time(TimeSpec::Periods(k), delta, 1.0)?,
        };
        let psi0 = c.state.boson.state(space, QUBIT_DOWN)?;
        let x = ladder_ops(space)?.x;
        let psi_t = Propagator::new(&model.hamiltonian())?.evolve(&psi0, time)?;
        let chi = susceptibility(
            |pp| {
                let psi = Propagator::new(&model.hamiltonian_at_physical(pp))?.evolve(&psi0, time)?;
                Ok(expect(&x, &psi)?.re)
            },
            p,
            None,
        )?;
        let exact = qfi_fidelity_exact(&model, &psi0, time, None)?.value;
        let analytic = match model.kind() {
            ModelKind::QrmFull => None,
            _ => qfi_analytic(&model, &psi0, time).ok().map(|r| r.value),
        };
        let point = Point {
            time,
            delta,
            mean: expect(&x, &psi_t)?.re,
            variance: variance(&x, &psi_t)?,
            chi: chi.value,
            exact,
            analytic,
        };
        Ok(Sample {
            observables: vec![point.mean, point.variance, point.chi, point.exact],
            edge_weight: interior_weight(&psi_t, EDGE_FRACTION)?,
            value: point,
        })
    })?;
    let v = run.value;
    if v.variance <= 0.0 {
        return Err(Error::NonFinite("vanishing quadrature variance".into()));
    }
    Ok(SweepRecord {
        model: params.kind().name().to_string(),
        g_or_lambda: p,
        delta: v.delta,
        eta: match params {
            ModelParams::QrmFull { eta, .. } => Some(eta),
            _ => None,
        },
        time: v.time,
        n: 0,
        mean: v.mean,
        variance: v.variance,
        chi: v.chi,
        inv_var: v.chi * v.chi / v.variance,
        qfi_analytic: v.analytic,
        qfi_exact: Some(v.exact),
        cutoff: run.cutoff,
        converged: run.converged,
        ratio: None,
        dephasing: None,
    })
}

fn run_task(c: &ExperimentConfig, task: &Task) -> Result<SweepRecord> {
    let omega = c.model.omega;
    match *task {
        Task::Quadrature { g } => {
            let p = inverted_variance_quadrature(g, omega, c.n, &c.state.boson, c.cutoff)?;
            let mut r = SweepRecord::from_point(&p);
            let model = build_qrm_effective(omega, g, p.cutoff)?;
            let psi0 = c.state.boson.state(model.space(), QUBIT_DOWN)?;
            r.qfi_analytic = qfi_analytic(&model, &psi0, p.time).ok().map(|q| q.value);
            Ok(r)
        }
        Task::Full { g, eta } => Ok(SweepRecord::from_point(&inverted_variance_full(g, omega, eta, c.n, c.cutoff)?)),
        Task::Loschmidt { g } => {
            let t = gap_time(c.time, delta_g(g), omega)?;
            let p = loschmidt(g, omega, &c.state.boson, c.state.c_up, c.state.c_down, t, c.cutoff)?;
            Ok(SweepRecord::from_point(&p.point))
        }
        Task::Qfi { p } => qfi_point(c, p),
        Task::Noise { g, eta, noise } => {
            let p = noisy_inverted_variance(g, omega, eta, &noise, c.n, c.cutoff)?;
            Ok(SweepRecord { dephasing: Some(noise.dephasing), ..SweepRecord::from_point(&p) })
        }
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    faer::set_global_parallelism(faer::Par::Seq);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// First local maximum of the finite-`η` inverted variance `F(g)` scanning
/// toward the critical point on a log grid in `Δ_g`, refined by golden
/// section in `log Δ_g`.
pub fn optimal_working_point(eta: f64, omega: f64, n: usize, policy: CutoffPolicy) -> Result<Optimum> {
    let g_of = |log_delta: f64| (1.0 - log_delta.exp() / 4.0).sqrt();
    let f = |log_delta: f64| -> Result<f64> {
        Ok(inverted_variance_full(g_of(log_delta), omega, eta, n, policy)?.inverted_variance)
    };
    let ratio: f64 = 0.9;
    let start = 2.0f64.ln();
    let stop = 1e-3f64.ln();
    let mut xs = vec![start];
    let mut fs = vec![f(start)?];
    loop {
        let x = xs[xs.len() - 1] + ratio.ln();
        if x < stop {
            return Err(Error::InvalidParameter(format!("no local maximum of F above delta = 1e-3 at eta = {eta}")));
        }
        let fx = f(x)?;
        let k = fs.len();
        xs.push(x);
        fs.push(fx);
        if k >= 2 && fs[k - 1] > fs[k - 2] && fs[k - 1] > fx {
            break;
        }
    }
    let k = fs.len() - 2;
    let (mut a, mut b) = (xs[k + 1], xs[k - 1]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > 1e-4 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let best = [(x, f(x)?), (xs[k], fs[k]), (c, fc), (d, fd)].into_iter().fold((x, f64::NEG_INFINITY), |acc, p| {
        if p.1 > acc.1 {
            p
        } else {
            acc
        }
    });
    Ok(Optimum { eta, g_o: g_of(best.0), delta: best.0.exp(), inv_var: best.1 })
}

/// Runs a configured experiment. Failing grid points are reported in
/// [`RunOutput::failures`]; the rest of the grid still runs.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    if config.experiment == Experiment::Validate {
        let checks = with_pool(config.workers, validate)?;
        return Ok(RunOutput { checks, ..RunOutput::default() });
    }
    let tasks = tasks(config);
    let results: Vec<Result<SweepRecord>> =
        with_pool(config.workers, || tasks.par_iter().map(|t| run_task(config, t)).collect())?;
    let mut out = RunOutput::default();
    for (index, (task, res)) in tasks.iter().zip(results).enumerate() {
        match res {
            Ok(r) => out.records.push(r),
            Err(e) => {
                log::error!("grid point {index} ({}): {e}", task.param());
                out.failures.push(PointFailure { index, param: task.param(), message: e.to_string() });
            }
        }
    }
    let mut fit_group = |label: String, recs: Vec<SweepRecord>| match fit_records(&recs) {
        Ok(fit) => out.fits.push(FitReport { label, fit }),
        Err(e) => log::warn!("no fit for {label}: {e}"),
    };
    match config.experiment {
        Experiment::Quadrature | Experiment::Loschmidt => fit_group("inv_var ~ delta".into(), out.records.clone()),
        Experiment::Noise => {
            for gamma in &config.noise.dephasing {
                let recs = out.records.iter().filter(|r| r.dephasing == Some(*gamma)).cloned().collect();
                fit_group(format!("inv_var ~ delta (dephasing {gamma})"), recs);
            }
        }
        Experiment::FiniteEta => {
            for eta in &config.model.eta {
                let recs = out.records.iter().filter(|r| r.eta == Some(*eta)).cloned().collect();
                fit_group(format!("inv_var ~ delta (eta {eta})"), recs);
            }
            if config.optimum {
                let etas = config.model.eta.clone();
                let optima: Vec<Result<Optimum>> = with_pool(config.workers, || {
                    etas.par_iter().map(|&eta| optimal_working_point(eta, config.model.omega, config.n, config.cutoff)).collect()
                })?;
                for (index, (eta, res)) in etas.iter().zip(optima).enumerate() {
                    match res {
                        Ok(o) => out.optima.push(o),
                        Err(e) => out.failures.push(PointFailure { index, param: *eta, message: e.to_string() }),
                    }
                }
                let pts: Vec<(f64, f64)> = out.optima.iter().map(|o| (o.eta, o.delta)).collect();
                match fit_powerlaw(&pts) {
                    Ok(fit) => out.fits.push(FitReport { label: "delta_go ~ eta".into(), fit }),
                    Err(e) => log::warn!("no optimum fit: {e}"),
                }
            }
        }
        Experiment::Qfi | Experiment::Validate => {}
    }
    Ok(out)
}
