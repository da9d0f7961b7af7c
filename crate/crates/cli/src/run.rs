use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use cumulant::analysis::{nonmarkovianity_witness, observables, DensityMatrix, ObservableTable, Picture};
use cumulant::generators::{
    bohr_decompose, default_gap_threshold, group_frequencies, Dynamics, FrequencyGrouping, Propagator, Trajectory,
};
use cumulant::linalg::{is_cptp, CMatrix};
use cumulant::models::{qutrit_boson, spin_boson, Model};
use cumulant::rates::{RateKernel, RateMethod};

use crate::config::{InitialState, Method, ModelConfig, RunConfig};
use crate::CliError;

pub const CPTP_TOL: f64 = 1e-8;

/// Everything needed to propagate, built from a validated config.
pub struct Setup {
    pub model: Model,
    pub propagator: Propagator,
    pub rho0: DensityMatrix,
    pub partner: Option<DensityMatrix>,
    pub grouping: Option<FrequencyGrouping>,
    pub times: Vec<f64>,
    pub selectors: Vec<(usize, usize)>,
}

pub fn build_model(config: &RunConfig) -> Result<Model, CliError> {
    let b = &config.bath;
    match config.model {
        ModelConfig::SpinBoson => spin_boson(b.alpha, b.t_eff, b.kind()?, b.omega_c),
        ModelConfig::QutritBoson { delta_omega } => qutrit_boson(b.alpha, b.t_eff, delta_omega),
    }
    .map_err(CliError::setup)
}

pub fn initial_state(model: &Model, state: &InitialState, field: &str) -> Result<DensityMatrix, CliError> {
    match state {
        InitialState::Preset(name) => model
            .preset(name)
            .map_err(|e| CliError::Config(format!("{field}: {e}"))),
        InitialState::Matrix { matrix } => {
            let d = model.dim();
            if matrix.len() != d || matrix.iter().any(|row| row.len() != d) {
                return Err(CliError::Config(format!(
                    "{field}.matrix: expected a {d}x{d} matrix for {}",
                    model.name
                )));
            }
            let m = CMatrix::from_fn(d, d, |r, c| Complex64::new(matrix[r][c][0], matrix[r][c][1]));
            DensityMatrix::with_tolerances(m, 1e-12, 1e-9, 1e-12)
                .map_err(|e| CliError::Config(format!("{field}.matrix: {e}")))
        }
    }
}

pub fn build(config: &RunConfig) -> Result<Setup, CliError> {
    config.validate()?;
    let model = build_model(config)?;
    let rho0 = initial_state(&model, &config.initial_state, "initial_state")?;
    let partner = config
        .witness
        .as_ref()
        .map(|w| initial_state(&model, &w.partner, "witness.partner"))
        .transpose()?;
    let dec = bohr_decompose(&model.system, model.system.default_tol_freq()).map_err(CliError::setup)?;
    let quadrature = config.quadrature.to_config();
    let kernel = |method| RateKernel::new(method, model.bath.clone(), quadrature).map_err(CliError::setup);
    let mut grouping = None;
    let dynamics = match config.method {
        Method::ExactCutoff => Dynamics::Cumulant(kernel(RateMethod::ExactCutoff)?),
        Method::Star => Dynamics::Cumulant(kernel(RateMethod::Star)?),
        Method::DoubleStar => Dynamics::Cumulant(kernel(RateMethod::DoubleStar)?),
        Method::DaviesGlobal => Dynamics::DaviesGlobal(model.bath.clone()),
        Method::DaviesLocal => {
            let threshold = config
                .grouping
                .as_ref()
                .map_or_else(|| default_gap_threshold(&dec), |g| g.gap_threshold);
            let g = group_frequencies(&dec, threshold)
                .map_err(|e| CliError::Config(format!("grouping.gap_threshold: {e}")))?;
            grouping = Some(g.clone());
            Dynamics::DaviesLocal {
                bath: model.bath.clone(),
                grouping: g,
            }
        }
    };
    let propagator =
        Propagator::with_decomposition(model.system.clone(), dec, dynamics).map_err(CliError::setup)?;
    let selectors = config.selectors(model.dim());
    if let Some(&(r, c)) = selectors.iter().find(|&&(r, c)| r >= model.dim() || c >= model.dim()) {
        return Err(CliError::Config(format!(
            "observables: selector [{r}, {c}] out of range for dimension {}",
            model.dim()
        )));
    }
    Ok(Setup {
        model,
        propagator,
        rho0,
        partner,
        grouping,
        times: config.time_grid.points(),
        selectors,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub t: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CptpCheck {
    pub t: f64,
    pub cptp: bool,
    pub min_choi_eigenvalue: f64,
    pub trace_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessSummary {
    pub monotone: bool,
    pub total_increase: f64,
    pub increase_intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupingSummary {
    pub gap_threshold_used: Option<f64>,
    pub group_means: Vec<f64>,
    pub delta_omega: f64,
    pub delta_big_omega: Option<f64>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub build_s: f64,
    pub propagate_s: f64,
    pub checks_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: &'static str,
    pub config: RunConfig,
    pub model: &'static str,
    pub method: &'static str,
    pub bohr_frequencies: Vec<f64>,
    pub grouping: Option<GroupingSummary>,
    pub diagnostics: Vec<StepReport>,
    pub max_trace_defect: f64,
    pub min_eigenvalue: f64,
    pub cptp_checks: Vec<CptpCheck>,
    pub witness: Option<WitnessSummary>,
    pub outputs: Vec<String>,
    pub timings: Timings,
}

pub struct RunOutput {
    pub trajectory: Trajectory,
    pub schrodinger: ObservableTable,
    pub interaction: ObservableTable,
    pub report: RunReport,
}

/// Indices of the first, middle and last grid points.
fn spot_indices(n: usize) -> Vec<usize> {
    let mut idx = vec![0, n / 2, n - 1];
    idx.dedup();
    idx
}

pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    let setup = build(config)?;
    let built = start.elapsed().as_secs_f64();

    let trajectory = setup
        .propagator
        .propagate(&setup.rho0, &setup.times)
        .map_err(CliError::runtime)?;
    let propagated = start.elapsed().as_secs_f64();

    let cptp_checks = spot_indices(setup.times.len())
        .into_iter()
        .map(|k| {
            let t = setup.times[k];
            let map = setup.propagator.interaction_map(t).map_err(CliError::runtime)?;
            let r = is_cptp(&map, CPTP_TOL);
            Ok(CptpCheck {
                t,
                cptp: r.cptp,
                min_choi_eigenvalue: r.min_eigenvalue,
                trace_defect: r.trace_defect,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if let Some(bad) = cptp_checks.iter().find(|c| !c.cptp) {
        return Err(CliError::Invariant(format!(
            "dynamical map at t = {} is not CPTP: min Choi eigenvalue {:.3e}, trace defect {:.3e}",
            bad.t, bad.min_choi_eigenvalue, bad.trace_defect
        )));
    }

    let witness = match &setup.partner {
        Some(partner) => {
            let other = setup
                .propagator
                .propagate(partner, &setup.times)
                .map_err(CliError::runtime)?;
            let w = nonmarkovianity_witness(&trajectory.interaction, &other.interaction).map_err(CliError::runtime)?;
            Some(WitnessSummary {
                monotone: w.monotone,
                total_increase: w.total_increase,
                increase_intervals: w.increase_intervals,
            })
        }
        None => None,
    };
    let checked = start.elapsed().as_secs_f64();

    let table = |p: Picture| observables(trajectory.series(p), &setup.selectors).map_err(CliError::runtime);
    let schrodinger = table(Picture::Schrodinger)?;
    let interaction = table(Picture::Interaction)?;

    let diagnostics: Vec<StepReport> = trajectory
        .diagnostics
        .iter()
        .map(|d| StepReport {
            t: d.time,
            trace_defect: d.trace_defect,
            min_eigenvalue: d.min_eigenvalue,
        })
        .collect();
    let grouping = setup.grouping.as_ref().map(|g| GroupingSummary {
        gap_threshold_used: config
            .grouping
            .as_ref()
            .map(|c| c.gap_threshold)
            .or_else(|| Some(default_gap_threshold(setup.propagator.decomposition()))),
        group_means: g.groups.iter().map(|x| x.mean).collect(),
        delta_omega: g.delta_omega,
        delta_big_omega: g.delta_big_omega,
        warning: g.warning.clone(),
    });
    let report = RunReport {
        status: "ok",
        config: config.clone(),
        model: setup.model.name,
        method: config.method.name(),
        bohr_frequencies: setup.propagator.decomposition().frequencies().to_vec(),
        grouping,
        max_trace_defect: diagnostics.iter().map(|d| d.trace_defect).fold(0.0, f64::max),
        min_eigenvalue: diagnostics.iter().map(|d| d.min_eigenvalue).fold(f64::INFINITY, f64::min),
        diagnostics,
        cptp_checks,
        witness,
        outputs: Vec::new(),
        timings: Timings {
            build_s: built,
            propagate_s: propagated - built,
            checks_s: checked - propagated,
            total_s: start.elapsed().as_secs_f64(),
        },
    };
    Ok(RunOutput {
        trajectory,
        schrodinger,
        interaction,
        report,
    })
}

/// Requires the configs of a comparison to share model, grid, initial state
/// and observables.
pub fn check_comparable(configs: &[RunConfig]) -> Result<(), CliError> {
    let Some(first) = configs.first() else {
        return Err(CliError::Config("compare needs at least one config".into()));
    };
    for (k, c) in configs.iter().enumerate().skip(1) {
        let mismatch = |field: &str| {
            CliError::Config(format!("config {k} differs from config 0 in `{field}`; compared runs must share it"))
        };
        if c.model != first.model {
            return Err(mismatch("model"));
        }
        if c.time_grid != first.time_grid {
            return Err(mismatch("time_grid"));
        }
        if c.initial_state != first.initial_state {
            return Err(mismatch("initial_state"));
        }
        if c.observables != first.observables {
            return Err(mismatch("observables"));
        }
    }
    Ok(())
}
