//! `axilab run`: solver, snapshots and diagnostics.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use axilab_core::drift::{make_b2_from_stream, DriftDecomposition, DriftSpec};
use axilab_core::gamma::{DtPolicy, GammaRunConfig, GammaSolver, GammaState, WallCondition};
use axilab_core::io::Snapshot;
use axilab_core::liouville::{liouville_report, LiouvilleReport};
use axilab_core::norms::{
    bmo_seminorm, e_norm, hollowed_scaled_energy, holder_fit, oscillation_profile, Anchor, OscillationProfile,
};
use axilab_core::ns::{b_of, compute_stream, gamma_of, NSState, NsRunConfig, NsSolver};
use axilab_core::{Error, Grid, Parity, ScalarField, Trajectory, VectorFieldCyl};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{RunDir, RunManifest, CONFIG_FILE, DIAGNOSTICS_CSV, DIAGNOSTICS_FILE};
use crate::config::{InitialKind, RunConfig, SolverKind, WallKind};
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct ScaleRow {
    #[serde(rename = "R")]
    pub radius: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaRange {
    pub initial_sup: f64,
    pub initial_inf: f64,
    /// Bounds over initial cells, axis value and wall data.
    pub data_sup: f64,
    pub data_inf: f64,
    /// Extremes over every step for `Γ` runs, over snapshots for Navier-Stokes.
    pub sup: f64,
    pub inf: f64,
    /// Largest excursion beyond the bounds set by the data.
    pub max_principle_excess: f64,
}

/// Diagnostics of one `Γ` history.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub name: String,
    pub hse: f64,
    pub bmo: f64,
    pub sup_rb3: f64,
    pub e_norm: f64,
    pub per_scale: Vec<ScaleRow>,
    /// `null` when every oscillation vanishes or too few scales are resolved.
    pub alpha: Option<f64>,
    pub alpha_degenerate: bool,
    pub fit_residual: Option<f64>,
    /// `J_{R/2}/J_R` per adjacent pair, `null` where `J_R = 0`.
    pub decay_ratios: Vec<Option<f64>>,
    pub gamma_range: GammaRange,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub liouville: Option<LiouvilleReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub solver: SolverKind,
    pub config_hash: String,
    pub runs: Vec<Diagnostics>,
}

pub struct RunOutcome {
    pub report: DiagnosticsReport,
    pub manifest: RunManifest,
}

pub fn initial_gamma(kind: InitialKind, amplitude: f64, grid: Grid) -> ScalarField {
    let (rm, l) = (grid.r_max(), grid.z_len());
    match kind {
        InitialKind::RSquared => ScalarField::from_fn(grid, Parity::Even, move |r, _| amplitude * r * r),
        InitialKind::SignedBump => ScalarField::from_fn(grid, Parity::Even, move |r, z| {
            4.0 * amplitude * r * r * (1.0 - r * r / (rm * rm)) * ((2.0 * PI * z / l).sin() + 0.5)
        }),
        _ => ScalarField::zeros(grid, Parity::Even),
    }
}

pub fn initial_velocity(kind: InitialKind, amplitude: f64, grid: Grid) -> Result<VectorFieldCyl, CliError> {
    match kind {
        InitialKind::RigidRotation => Ok(VectorFieldCyl::from_fn(grid, move |r, _| [0.0, amplitude * r, 0.0])),
        InitialKind::Swirling => {
            let l = grid.z_len();
            let stream = ScalarField::from_fn(grid, Parity::Odd, move |r, z| {
                let w = (1.0 - r * r).max(0.0);
                0.5 * r * w * w * (2.0 * PI * z / l).sin()
            });
            let mut v = make_b2_from_stream(&stream).map_err(CliError::solver)?;
            v.vtheta = ScalarField::from_fn(grid, Parity::Odd, move |r, z| {
                amplitude * r * (-4.0 * r * r).exp() * (1.0 + 0.3 * (2.0 * PI * z / l).cos())
            });
            Ok(v)
        }
        _ => Ok(VectorFieldCyl::zeros(grid)),
    }
}

fn scale_rows(p: &OscillationProfile) -> Vec<ScaleRow> {
    p.entries
        .iter()
        .map(|e| ScaleRow {
            radius: e.radius,
            m: e.m,
            big_m: e.big_m,
            j: e.j,
            samples: e.samples,
        })
        .collect()
}

fn profile_diagnostics(traj: &Trajectory<ScalarField>, cfg: &RunConfig) -> Result<(OscillationProfile, Option<f64>, bool, Option<f64>, Vec<Option<f64>>), CliError> {
    let anchor = Anchor {
        z0: cfg.diagnostics.anchor_z,
        t0: traj.last_time(),
    };
    let profile = oscillation_profile(traj, &cfg.diagnostics.scales, anchor).map_err(CliError::solver)?;
    let (alpha, degenerate, residual) = match holder_fit(&profile) {
        Ok(f) if f.alpha.is_infinite() => (None, true, None),
        Ok(f) => (Some(f.alpha), false, Some(f.residual)),
        Err(Error::InsufficientScales { .. }) => (None, false, None),
        Err(e) => return Err(CliError::solver(e)),
    };
    let ratios = profile
        .entries
        .windows(2)
        .map(|w| (w[0].j > 0.0).then(|| w[1].j / w[0].j))
        .collect();
    Ok((profile, alpha, degenerate, residual, ratios))
}

pub fn gamma_wall(kind: WallKind) -> WallCondition {
    match kind {
        WallKind::Zero => WallCondition::Zero,
        WallKind::Frozen => WallCondition::Frozen,
    }
}

/// Runs the `Γ` solver for one drift and writes its series below `prefix`.
fn gamma_member(
    cfg: &RunConfig,
    grid: Grid,
    name: &str,
    spec: &DriftSpec,
    dir: &mut RunDir,
    prefix: &str,
) -> Result<Diagnostics, CliError> {
    let z0 = cfg.diagnostics.anchor_z;
    let drift = spec.build(grid, z0).map_err(CliError::config)?;
    let init = initial_gamma(cfg.initial.kind, cfg.initial.amplitude, grid);
    let solver = GammaSolver::new(&drift, gamma_wall(cfg.solver.wall));
    let run = solver
        .run(
            &GammaState::new(init.clone(), 0.0).map_err(CliError::solver)?,
            &GammaRunConfig {
                dt: cfg.solver.dt.unwrap_or_default(),
                t_end: cfg.solver.t_end,
                cadence: cfg.solver.cadence,
            },
        )
        .map_err(CliError::solver)?;
    dir.save_snapshot(&format!("{prefix}initial.axns"), &Snapshot::scalar(0.0, init.clone()))?;
    dir.save_series(&format!("{prefix}snapshots"), &run.trajectory, |t, f| Snapshot::scalar(t, f.clone()))?;
    let mut csv = String::from("step,time,sup,inf,l2\n");
    for s in &run.steps {
        let _ = writeln!(csv, "{},{:e},{:e},{:e},{:e}", s.step, s.time, s.sup, s.inf, s.l2);
    }
    dir.write(&format!("{prefix}steps.csv"), csv.as_bytes())?;

    let norms = e_norm(&drift, &cfg.diagnostics.scales, z0).map_err(CliError::solver)?;
    let (profile, alpha, alpha_degenerate, fit_residual, decay_ratios) = profile_diagnostics(&run.trajectory, cfg)?;
    let gamma_range = GammaRange {
        initial_sup: init.max(),
        initial_inf: init.min(),
        data_sup: run.data_max,
        data_inf: run.data_min,
        sup: run.steps.iter().fold(f64::NEG_INFINITY, |m, s| m.max(s.sup)),
        inf: run.steps.iter().fold(f64::INFINITY, |m, s| m.min(s.inf)),
        max_principle_excess: run.max_principle_excess(),
    };
    Ok(Diagnostics {
        name: name.to_string(),
        hse: norms.hse,
        bmo: norms.bmo,
        sup_rb3: norms.sup_rb3,
        e_norm: norms.total,
        per_scale: scale_rows(&profile),
        alpha,
        alpha_degenerate,
        fit_residual,
        decay_ratios,
        gamma_range,
        liouville: None,
    })
}

fn ns_run(cfg: &RunConfig, grid: Grid, dir: &mut RunDir) -> Result<Diagnostics, CliError> {
    let v0 = initial_velocity(cfg.initial.kind, cfg.initial.amplitude, grid)?;
    let solver = NsSolver::new(grid, cfg.solver.wall_swirl);
    let run = solver
        .run(
            &NSState::new(v0.clone(), 0.0).map_err(CliError::solver)?,
            &NsRunConfig {
                dt: cfg.solver.dt.unwrap_or(DtPolicy::Cfl { safety: 0.5 }),
                t_end: cfg.solver.t_end,
                cadence: cfg.solver.cadence,
                poisson: cfg.solver.poisson,
            },
        )
        .map_err(CliError::solver)?;
    dir.save_snapshot("initial.axns", &Snapshot::vector(0.0, &v0))?;
    dir.save_series("snapshots", &run.trajectory, Snapshot::vector)?;
    dir.save_snapshot("pressure.axns", &Snapshot::scalar(run.trajectory.last_time(), run.pressure.clone()))?;
    let mut csv = String::from("step,time,kinetic_energy,max_speed,max_abs_gamma,divergence,poisson_iterations\n");
    for s in &run.steps {
        let _ = writeln!(
            csv,
            "{},{:e},{:e},{:e},{:e},{:e},{}",
            s.step, s.time, s.kinetic_energy, s.max_speed, s.max_abs_gamma, s.divergence, s.poisson_iterations
        );
    }
    dir.write("steps.csv", csv.as_bytes())?;

    // Norms and oscillations of the final state, held steady.
    let last = run.trajectory.last();
    let scales = &cfg.diagnostics.scales;
    let z0 = cfg.diagnostics.anchor_z;
    let b = b_of(last);
    let hse = hollowed_scaled_energy(&Trajectory::steady(b.clone()), scales, Anchor { z0, t0: 0.0 })
        .map_err(CliError::solver)?
        .value;
    let stream = compute_stream(&b, &cfg.solver.poisson).map_err(CliError::solver)?;
    let bmo = bmo_seminorm(&stream).value;
    let gamma_traj = Trajectory::steady(gamma_of(last));
    let (profile, alpha, alpha_degenerate, fit_residual, decay_ratios) = profile_diagnostics(&gamma_traj, cfg)?;
    let g0 = gamma_of(&v0);
    // Axis value 0 and wall value `r_max v^θ_wall` join the initial cells.
    let wall = cfg.solver.wall_swirl * grid.r_max();
    let (data_sup, data_inf) = (g0.max().max(wall).max(0.0), g0.min().min(wall).min(0.0));
    let data_abs = data_sup.abs().max(data_inf.abs());
    let liouville = liouville_report(&run.trajectory, &cfg.diagnostics.liouville.unwrap_or_default())
        .map_err(CliError::solver)?;
    let gammas: Vec<ScalarField> = run.trajectory.snapshots().iter().map(gamma_of).collect();
    let sup = gammas.iter().fold(f64::NEG_INFINITY, |m, g| m.max(g.max()));
    let inf = gammas.iter().fold(f64::INFINITY, |m, g| m.min(g.min()));
    Ok(Diagnostics {
        name: "main".into(),
        hse,
        bmo,
        sup_rb3: 0.0,
        e_norm: hse + bmo,
        per_scale: scale_rows(&profile),
        alpha,
        alpha_degenerate,
        fit_residual,
        decay_ratios,
        gamma_range: GammaRange {
            initial_sup: g0.max(),
            initial_inf: g0.min(),
            data_sup,
            data_inf,
            sup,
            inf,
            // Steps record only `|Γ|`; signed extremes come from snapshots.
            max_principle_excess: run
                .steps
                .iter()
                .fold(0.0f64, |m, s| m.max(s.max_abs_gamma - data_abs))
                .max(sup - data_sup)
                .max(data_inf - inf),
        },
        liouville: Some(liouville),
    })
}

fn diagnostics_csv(report: &DiagnosticsReport) -> String {
    let mut csv = String::from("run,R,m,M,J,samples\n");
    for d in &report.runs {
        for s in &d.per_scale {
            let _ = writeln!(csv, "{},{:e},{:e},{:e},{:e},{}", d.name, s.radius, s.m, s.big_m, s.j, s.samples);
        }
    }
    csv
}

/// Executes the configured scenario into `out`.
pub fn cmd_run(cfg: &RunConfig, out: &Path, reproducible: bool) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let mut dir = RunDir::create(out)?;
    dir.write(CONFIG_FILE, cfg.canonical()?.as_bytes())?;
    let runs = match (cfg.solver.kind, cfg.suite.is_some()) {
        (SolverKind::Ns, _) => vec![ns_run(cfg, grid, &mut dir)?],
        (SolverKind::Gamma, false) => vec![gamma_member(cfg, grid, "main", &cfg.drift, &mut dir, "")?],
        (SolverKind::Gamma, true) => {
            let members = cfg.suite_members()?;
            let root = dir.root().to_path_buf();
            // Members write disjoint subtrees; results are collected in suite order.
            let results: Vec<Result<(Diagnostics, RunDir), CliError>> = members
                .par_iter()
                .map(|(name, spec)| {
                    let mut sub = RunDir::create(&root)?;
                    let d = gamma_member(cfg, grid, name, spec, &mut sub, &format!("members/{name}/"))?;
                    Ok((d, sub))
                })
                .collect();
            let mut out = Vec::new();
            for r in results {
                let (d, sub) = r?;
                dir.absorb(sub);
                out.push(d);
            }
            out
        }
    };
    let report = DiagnosticsReport {
        solver: cfg.solver.kind,
        config_hash: cfg.hash()?,
        runs,
    };
    dir.write_json(DIAGNOSTICS_FILE, &report)?;
    dir.write(DIAGNOSTICS_CSV, diagnostics_csv(&report).as_bytes())?;
    let manifest = dir.finish(cfg, reproducible)?;
    Ok(RunOutcome { report, manifest })
}

/// Rebuilds the drift of a suite member or of the main run.
pub fn member_drift(cfg: &RunConfig, name: &str, grid: Grid) -> Result<DriftDecomposition, CliError> {
    let spec = if cfg.suite.is_some() {
        cfg.suite_members()?
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| CliError::Config(format!("unknown suite member `{name}`")))?
    } else {
        cfg.drift
    };
    spec.build(grid, cfg.diagnostics.anchor_z).map_err(CliError::config)
}
