//! `axilab verify`: estimate checks on a stored run.

use std::path::Path;

use axilab_core::drift::{divergence, DriftDecomposition};
use axilab_core::norms::{oscillation_profile, Anchor};
use axilab_core::ns::{gamma_of, NsSolver};
use axilab_core::verify::{
    log_transform_residual_in, lower_bound_check, lp_lower_bound_check, mean_value_ratio, moser_iterate,
    nash_random_suite, normalize_phi, oscillation_decay_check, weighted_poincare_ratio, CheckEntry, CutoffPair,
    VerifierReport,
};
use axilab_core::{Ball, ScalarField, Trajectory, VectorFieldCyl};
use serde::{Deserialize, Serialize};

use crate::artifacts::{load_scalar_series, load_vector_series, RunDir, VERIFIER_FILE};
use crate::config::{RunConfig, SolverKind};
use crate::error::CliError;
use crate::run::member_drift;

/// Lower floor on `Φ` for the logarithmic transform.
pub const LOG_FLOOR: f64 = 1e-12;

/// Rounding allowance on `lhs - rhs` of the Nash inequality.
pub const NASH_TOL: f64 = 1e-12;

/// Divergence allowed in projected velocity snapshots.
pub const DIVERGENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub name: String,
    pub report: VerifierReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub config_hash: String,
    pub all_pass: bool,
    pub members: Vec<MemberReport>,
}

impl VerifyOutput {
    pub fn entries(&self) -> impl Iterator<Item = (&str, &CheckEntry)> {
        self.members
            .iter()
            .flat_map(|m| m.report.entries.iter().map(move |e| (m.name.as_str(), e)))
    }
}

fn hypothesis(name: &str, e: impl std::fmt::Display) -> CheckEntry {
    CheckEntry::hypothesis_failed(name, 0.0, 0.0).noted(e.to_string())
}

/// Estimate checks on one `Γ` history driven by `drift`.
pub fn verify_gamma(cfg: &RunConfig, traj: &Trajectory<ScalarField>, drift: &DriftDecomposition) -> VerifierReport {
    let mut rep = VerifierReport::default();
    let scales = &cfg.diagnostics.scales;
    let v = &cfg.verifier;
    let r0 = scales.r0;
    let anchor = Anchor {
        z0: cfg.diagnostics.anchor_z,
        t0: traj.last_time(),
    };

    match mean_value_ratio(traj, anchor, r0, v.mean_value_p) {
        Ok(x) => rep.push(
            CheckEntry::reported("mean_value_ratio", x, 1.0)
                .at_scale(r0)
                .with("p", v.mean_value_p),
        ),
        Err(e) => rep.push(hypothesis("mean_value_ratio", e).at_scale(r0)),
    }

    match moser_iterate(traj, anchor, r0, v.moser_rungs) {
        Ok(ladder) => {
            for (rung, c) in ladder.rungs.iter().zip(&ladder.running_constant) {
                rep.push(
                    CheckEntry::reported("moser_rung", rung.normalized, ladder.sup_half)
                        .at_scale(rung.radius)
                        .with("p", rung.exponent.value())
                        .with("running_constant", *c),
                );
            }
        }
        Err(e) => rep.push(hypothesis("moser_rung", e).at_scale(r0)),
    }

    match oscillation_decay_check(traj, scales, anchor, v.constants.delta) {
        Ok(es) => rep.extend(es),
        Err(e) => rep.push(hypothesis("oscillation_decay", e)),
    }

    let positivity = oscillation_profile(traj, scales, anchor)
        .and_then(|p| normalize_phi(traj, &p))
        .map_err(|e| e.to_string());
    match positivity {
        Ok(phi) => {
            match lower_bound_check(&phi.phi, &v.constants, anchor, r0) {
                Ok(e) => rep.push(e),
                Err(e) => rep.push(hypothesis("lower_bound", e).at_scale(r0)),
            }
            for &p in &v.lp_exponents {
                match lp_lower_bound_check(&phi.phi, anchor, r0, p, phi.axis_value) {
                    Ok(e) => rep.push(e),
                    Err(e) => rep.push(hypothesis("lp_lower_bound", e).at_scale(r0).with("p", p)),
                }
            }
            let region = Ball::axial(anchor.z0, 0.125 * r0);
            match log_transform_residual_in(&phi.phi, drift, LOG_FLOOR, Some(&region)) {
                Ok(res) => {
                    let worst = region
                        .cells(res.grid())
                        .iter()
                        .map(|&(i, j, _)| res.get(i, j).abs())
                        .fold(0.0, f64::max);
                    rep.push(
                        CheckEntry::reported("log_transform_residual", worst, 0.0)
                            .at_scale(region.radius)
                            .with("floor", LOG_FLOOR),
                    );
                }
                Err(e) => rep.push(hypothesis("log_transform_residual", e).at_scale(region.radius)),
            }
        }
        Err(e) => {
            for name in ["lower_bound", "lp_lower_bound", "log_transform_residual"] {
                rep.push(hypothesis(name, &e).at_scale(r0));
            }
        }
    }

    let poincare = CutoffPair::new(anchor.z0, anchor.t0, r0, 0.5, 1.0)
        .and_then(|c| weighted_poincare_ratio(traj.last(), &c));
    match poincare {
        Ok(x) => rep.push(CheckEntry::reported("weighted_poincare", x, 0.0).at_scale(r0)),
        Err(e) => rep.push(hypothesis("weighted_poincare", e).at_scale(r0)),
    }
    rep
}

fn kinetic_energy(v: &VectorFieldCyl) -> f64 {
    let g = v.grid();
    let nz = g.nz();
    let m2 = v.magnitude_sq();
    (0..g.nr())
        .map(|i| 0.5 * g.cell_volume(i) * m2[i * nz..(i + 1) * nz].iter().sum::<f64>())
        .sum()
}

/// Structural checks on a Navier-Stokes history.
pub fn verify_ns(cfg: &RunConfig, traj: &Trajectory<VectorFieldCyl>) -> VerifierReport {
    let mut rep = VerifierReport::default();
    let snaps = traj.snapshots();
    let Some(first) = snaps.first() else {
        return rep;
    };
    let grid = *first.grid();
    let solver = NsSolver::new(grid, cfg.solver.wall_swirl);
    let bounded: Vec<VectorFieldCyl> = snaps
        .iter()
        .map(|v| {
            let mut v = v.clone();
            solver.apply_boundary(&mut v);
            v
        })
        .collect();

    let div = bounded.iter().skip(1).map(|v| divergence(v).sup_abs()).fold(0.0, f64::max);
    if snaps.len() > 1 {
        rep.push(CheckEntry::compare("divergence", div, DIVERGENCE_TOL, 0.0));
    } else {
        rep.push(CheckEntry::vacuous("divergence"));
    }

    let swirl_free = first.vtheta.sup_abs() == 0.0 && cfg.solver.wall_swirl == 0.0;
    if swirl_free {
        let worst = snaps.iter().map(|v| v.vtheta.sup_abs()).fold(0.0, f64::max);
        rep.push(CheckEntry::compare("swirl_free", worst, 1e-12, 0.0));
    } else {
        rep.push(CheckEntry::vacuous("swirl_free"));
    }

    let data = gamma_of(first).sup_abs().max((cfg.solver.wall_swirl * grid.r_max()).abs());
    let worst = snaps.iter().map(|v| gamma_of(v).sup_abs()).fold(0.0, f64::max);
    rep.push(CheckEntry::compare("gamma_max_principle", worst, data + 1e-6, 0.0).with("data_sup", data));

    let ke: Vec<f64> = bounded.iter().map(kinetic_energy).collect();
    let growth = ke
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] - 1.0 } else { w[1] })
        .fold(0.0, f64::max);
    rep.push(CheckEntry::compare("energy_nonincreasing", growth, 1e-6, 0.0).with("initial_energy", ke[0]));
    rep
}

/// Runs every check and writes `verifier.json`.
pub fn cmd_verify(dir_path: &Path, reproducible: bool) -> Result<VerifyOutput, CliError> {
    let (mut dir, cfg) = RunDir::open(dir_path)?;
    let grid = cfg.grid.build()?;
    let mut members = Vec::new();
    match cfg.solver.kind {
        SolverKind::Ns => {
            let traj = load_vector_series(&dir.path("snapshots"))?;
            members.push(MemberReport {
                name: "main".into(),
                report: verify_ns(&cfg, &traj),
            });
        }
        SolverKind::Gamma => {
            let names: Vec<String> = if cfg.suite.is_some() {
                cfg.suite_members()?.into_iter().map(|(n, _)| n).collect()
            } else {
                vec!["main".into()]
            };
            for name in names {
                let sub = if cfg.suite.is_some() {
                    format!("members/{name}/snapshots")
                } else {
                    "snapshots".into()
                };
                let traj = load_scalar_series(&dir.path(&sub))?;
                let drift = member_drift(&cfg, &name, grid)?;
                members.push(MemberReport {
                    report: verify_gamma(&cfg, &traj, &drift),
                    name,
                });
            }
        }
    }
    let v = &cfg.verifier;
    let nash = nash_random_suite(cfg.seed, v.nash_samples, v.nash_m).map_err(|e| CliError::Verifier(e.to_string()))?;
    let mut global = VerifierReport::default();
    global.push(
        CheckEntry::compare("nash_inequality", nash.max_excess, NASH_TOL, 0.0)
            .with("samples", nash.samples as f64)
            .with("m", v.nash_m)
            .with("max_lhs", nash.max_lhs),
    );
    members.push(MemberReport {
        name: "global".into(),
        report: global,
    });
    let out = VerifyOutput {
        config_hash: cfg.hash()?,
        all_pass: members.iter().all(|m| m.report.all_pass()),
        members,
    };
    dir.write_json(VERIFIER_FILE, &out)?;
    dir.finish(&cfg, reproducible)?;
    Ok(out)
}
