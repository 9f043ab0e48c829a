//! Explicit projection method for axisymmetric Navier-Stokes with swirl,
//! unit viscosity.
//!
//! Each step advects with upwind differences, adds the centrifugal and
//! Coriolis reactions, applies the viscous operator and then removes the
//! gradient part of `(v^r, v^z)` with `G = -D*`, where `D` is the conservative
//! divergence of [`crate::drift::divergence`]. Because `DG` has the same range
//! as `D`, the projected field is divergence-free to solver precision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Parity, ScalarField, VectorFieldCyl};
use crate::gamma::DtPolicy;
use crate::grid::Grid;
use crate::poisson::{grad_r, PoissonSolveConfig, SpectralPoisson, Stencil};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct NSState {
    pub velocity: VectorFieldCyl,
    pub pressure: ScalarField,
    pub time: f64,
}

impl NSState {
    pub fn new(velocity: VectorFieldCyl, time: f64) -> Result<Self> {
        if !velocity.is_finite() {
            return Err(Error::InvalidInput("initial velocity is not finite".into()));
        }
        let pressure = ScalarField::zeros(*velocity.grid(), Parity::Even);
        Ok(Self {
            velocity,
            pressure,
            time,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.velocity.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NsRunConfig {
    #[serde(default = "default_ns_dt")]
    pub dt: DtPolicy,
    pub t_end: f64,
    pub cadence: f64,
    #[serde(default)]
    pub poisson: PoissonSolveConfig,
}

fn default_ns_dt() -> DtPolicy {
    DtPolicy::Cfl { safety: 0.5 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NsStepStats {
    pub step: usize,
    pub time: f64,
    pub kinetic_energy: f64,
    pub max_speed: f64,
    pub max_abs_gamma: f64,
    pub divergence: f64,
    pub poisson_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct NsRun {
    pub trajectory: Trajectory<VectorFieldCyl>,
    pub pressure: ScalarField,
    pub steps: Vec<NsStepStats>,
    pub dt: f64,
}

/// Projection solver with a fixed swirl speed imposed at the outer wall.
#[derive(Debug)]
pub struct NsSolver {
    grid: Grid,
    wall_swirl: f64,
    projector: SpectralPoisson,
}

impl NsSolver {
    /// No-slip wall for `v^r` and `v^z`; `v^θ = wall_swirl` at `r_max`.
    pub fn new(grid: Grid, wall_swirl: f64) -> Self {
        Self {
            grid,
            wall_swirl,
            projector: SpectralPoisson::new(grid, Stencil::Projection),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn wall_swirl(&self) -> f64 {
        self.wall_swirl
    }

    /// Refreshes wall and axis ghosts in place.
    pub fn apply_boundary(&self, v: &mut VectorFieldCyl) {
        let w = self.wall_swirl;
        v.vr.set_outer_ghost(|_, inner| -inner);
        v.vz.set_outer_ghost(|_, inner| -inner);
        v.vtheta.set_outer_ghost(|_, inner| 2.0 * w - inner);
        v.fill_axis_ghosts();
    }

    /// Per-cell stability coefficient of the explicit update.
    fn diag(&self, v: &VectorFieldCyl) -> Vec<f64> {
        let g = self.grid;
        let (dr, dz) = (g.dr(), g.dz());
        let nz = g.nz();
        let mut out = vec![0.0; g.cells()];
        for i in 0..g.nr() {
            let ii = i as isize;
            let rc = g.r(ii);
            let visc = (g.r_face(ii) + g.r_face(ii - 1)) / (rc * dr * dr) + 2.0 / (dz * dz) + 1.0 / (rc * rc);
            for j in 0..nz {
                let adv = v.vr.get(i, j).abs() / dr
                    + v.vz.get(i, j).abs() / dz
                    + v.vtheta.get(i, j).abs() / rc;
                out[i * nz + j] = visc + adv;
            }
        }
        out
    }

    /// Largest step with `dt · diag <= 1` in every cell for the given state.
    pub fn dt_limit(&self, v: &VectorFieldCyl) -> f64 {
        1.0 / self.diag(v).into_iter().fold(0.0, f64::max)
    }

    fn check_dt(&self, v: &VectorFieldCyl, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
        }
        let nz = self.grid.nz();
        for (k, d) in self.diag(v).into_iter().enumerate() {
            if dt * d > 1.0 + 1e-12 {
                return Err(Error::Cfl {
                    i: k / nz,
                    j: k % nz,
                    dt,
                    limit: 1.0 / d,
                });
            }
        }
        Ok(())
    }

    /// Explicit transport, reaction and diffusion for one row of all components.
    fn predict_row(&self, v: &VectorFieldCyl, i: usize, dt: f64, out: [&mut [f64]; 3]) {
        let g = self.grid;
        let (dr, dz) = (g.dr(), g.dz());
        let ii = i as isize;
        let rc = g.r(ii);
        let (fp, fm) = (g.r_face(ii), g.r_face(ii - 1));
        let [our, out_t, ouz] = out;
        for j in 0..g.nz() {
            let jj = j as isize;
            let ur = v.vr.at(ii, jj);
            let ut = v.vtheta.at(ii, jj);
            let uz = v.vz.at(ii, jj);
            let transport = |f: &ScalarField| -> f64 {
                let c = f.at(ii, jj);
                let dfr = if ur > 0.0 {
                    c - f.at(ii - 1, jj)
                } else {
                    f.at(ii + 1, jj) - c
                } / dr;
                let dfz = if uz > 0.0 {
                    c - f.at(ii, jj - 1)
                } else {
                    f.at(ii, jj + 1) - c
                } / dz;
                -(ur * dfr + uz * dfz)
            };
            let lap = |f: &ScalarField| -> f64 {
                let c = f.at(ii, jj);
                (fp * (f.at(ii + 1, jj) - c) - fm * (c - f.at(ii - 1, jj))) / (rc * dr * dr)
                    + (f.at(ii, jj + 1) - 2.0 * c + f.at(ii, jj - 1)) / (dz * dz)
            };
            our[j] = ur + dt * (transport(&v.vr) + ut * ut / rc + lap(&v.vr) - ur / (rc * rc));
            out_t[j] = ut + dt * (transport(&v.vtheta) - ur * ut / rc + lap(&v.vtheta) - ut / (rc * rc));
            ouz[j] = uz + dt * (transport(&v.vz) + lap(&v.vz));
        }
    }

    /// Removes the discrete gradient part of `(v^r, v^z)` and returns the potential.
    pub fn project(&self, v: &mut VectorFieldCyl, cfg: &PoissonSolveConfig) -> Result<(ScalarField, usize)> {
        let g = self.grid;
        let (nr, nz) = (g.nr(), g.nz());
        self.apply_boundary(v);
        let div = crate::drift::divergence(v);
        let (phi, stats) = self.projector.solve(div.interior(), cfg)?;
        let mut col = vec![0.0; nr];
        let mut gcol = vec![0.0; nr];
        for j in 0..nz {
            for i in 0..nr {
                col[i] = phi[i * nz + j];
            }
            grad_r(&g, &col, &mut gcol);
            for i in 0..nr {
                let k = v.vr.get(i, j) - gcol[i];
                v.vr.set(i, j, k);
            }
        }
        let dz = g.dz();
        for i in 0..nr {
            for j in 0..nz {
                let gz = (phi[i * nz + (j + 1) % nz] - phi[i * nz + (j + nz - 1) % nz]) / (2.0 * dz);
                let k = v.vz.get(i, j) - gz;
                v.vz.set(i, j, k);
            }
        }
        self.apply_boundary(v);
        let p = ScalarField::from_interior(g, Parity::Even, &phi)?;
        Ok((p, stats.iterations))
    }

    pub fn step(&self, state: &NSState, dt: f64, cfg: &PoissonSolveConfig) -> Result<(NSState, usize)> {
        let mut v = state.velocity.clone();
        self.apply_boundary(&mut v);
        self.check_dt(&v, dt)?;
        let g = self.grid;
        let nz = g.nz();
        let mut next = VectorFieldCyl::zeros(g);
        {
            let rows_r = next.vr.interior_mut().par_chunks_mut(nz);
            let rows_t = next.vtheta.interior_mut().par_chunks_mut(nz);
            let rows_z = next.vz.interior_mut().par_chunks_mut(nz);
            rows_r
                .zip(rows_t)
                .zip(rows_z)
                .enumerate()
                .for_each(|(i, ((a, b), c))| self.predict_row(&v, i, dt, [a, b, c]));
        }
        let (phi, iters) = self.project(&mut next, cfg)?;
        let time = state.time + dt;
        if !next.is_finite() {
            return Err(Error::NonFinite { step: 0, time });
        }
        Ok((
            NSState {
                velocity: next,
                pressure: phi.scaled(1.0 / dt),
                time,
            },
            iters,
        ))
    }

    pub fn stats(&self, step: usize, state: &NSState, iters: usize) -> NsStepStats {
        let v = &state.velocity;
        let g = self.grid;
        let nz = g.nz();
        let m2 = v.magnitude_sq();
        let ke: f64 = (0..g.nr())
            .map(|i| 0.5 * g.cell_volume(i) * m2[i * nz..(i + 1) * nz].iter().sum::<f64>())
            .sum();
        NsStepStats {
            step,
            time: state.time,
            kinetic_energy: ke,
            max_speed: m2.iter().copied().fold(0.0, f64::max).sqrt(),
            max_abs_gamma: compute_gamma(state).sup_abs(),
            divergence: crate::drift::divergence(v).sup_abs(),
            poisson_iterations: iters,
        }
    }

    /// Runs at a uniform step fixed from the initial state.
    pub fn run(&self, initial: &NSState, cfg: &NsRunConfig) -> Result<NsRun> {
        self.grid.ensure_same(initial.grid())?;
        cfg.poisson.validate()?;
        if !(cfg.t_end > 0.0 && cfg.cadence > 0.0 && cfg.cadence <= cfg.t_end) {
            return Err(Error::InvalidInput(format!(
                "need 0 < cadence <= t_end, got cadence = {}, t_end = {}",
                cfg.cadence, cfg.t_end
            )));
        }
        let ratio = cfg.t_end / cfg.cadence;
        let n_snap = ratio.round() as usize;
        if (ratio - n_snap as f64).abs() > 1e-9 * ratio {
            return Err(Error::InvalidInput(format!(
                "t_end = {} is not a multiple of the cadence {}",
                cfg.t_end, cfg.cadence
            )));
        }
        let mut state = initial.clone();
        self.apply_boundary(&mut state.velocity);
        let per_snap = match cfg.dt {
            DtPolicy::Cfl { safety } => {
                if !(safety > 0.0 && safety <= 1.0) {
                    return Err(Error::InvalidInput(format!("CFL safety {safety} must lie in (0, 1]")));
                }
                (cfg.cadence / (safety * self.dt_limit(&state.velocity))).ceil().max(1.0) as usize
            }
            DtPolicy::Fixed { dt } => {
                let q = cfg.cadence / dt;
                let m = q.round();
                if !(dt > 0.0) || m < 1.0 || (q - m).abs() > 1e-9 * q {
                    return Err(Error::InvalidInput(format!(
                        "fixed dt = {dt} must divide the cadence {}",
                        cfg.cadence
                    )));
                }
                m as usize
            }
        };
        let dt = cfg.cadence / per_snap as f64;
        let t0 = initial.time;
        let mut times = vec![t0];
        let mut snaps = vec![state.velocity.clone()];
        let mut steps = vec![self.stats(0, &state, 0)];
        let mut count = 0usize;
        for s in 1..=n_snap {
            for _ in 0..per_snap {
                let (next, iters) = self.step(&state, dt, &cfg.poisson).map_err(|e| match e {
                    Error::NonFinite { time, .. } => Error::NonFinite { step: count + 1, time },
                    other => other,
                })?;
                count += 1;
                state = next;
                state.time = t0 + count as f64 * dt;
                steps.push(self.stats(count, &state, iters));
            }
            state.time = t0 + s as f64 * cfg.cadence;
            times.push(state.time);
            snaps.push(state.velocity.clone());
        }
        Ok(NsRun {
            trajectory: Trajectory::new(times, snaps)?,
            pressure: state.pressure,
            steps,
            dt,
        })
    }
}

/// `Γ = r v^θ`, even in `r`.
pub fn compute_gamma(state: &NSState) -> ScalarField {
    gamma_of(&state.velocity)
}

pub fn gamma_of(v: &VectorFieldCyl) -> ScalarField {
    v.vtheta.map_with_coords(Parity::Even, |r, _, u| r * u)
}

/// Radial-axial part `(v^r, 0, v^z)`.
pub fn compute_b(state: &NSState) -> VectorFieldCyl {
    b_of(&state.velocity)
}

pub fn b_of(v: &VectorFieldCyl) -> VectorFieldCyl {
    VectorFieldCyl {
        vr: v.vr.clone(),
        vtheta: ScalarField::zeros(*v.grid(), Parity::Odd),
        vz: v.vz.clone(),
    }
}

/// θ-stream function `B` with `b = curl(B e_θ)`.
///
/// Solves `(Δ - 1/r²) B = -ω_θ`, `ω_θ = ∂_z b^r - ∂_r b^z`, with the wall value
/// `B(r_max, z) = (1/r_max) ∫_0^{r_max} r b^z dr` fixed by the flux through the
/// disk, so that `ψ = r B` vanishes on the axis.
pub fn compute_stream(b: &VectorFieldCyl, cfg: &PoissonSolveConfig) -> Result<ScalarField> {
    let g = *b.grid();
    let (nr, nz) = (g.nr(), g.nz());
    let (dr, dz) = (g.dr(), g.dz());
    let mut rhs = vec![0.0; nr * nz];
    let wall: Vec<f64> = (0..nz)
        .map(|j| (0..nr).map(|i| g.r(i as isize) * dr * b.vz.get(i, j)).sum::<f64>() / g.r_max())
        .collect();
    for i in 0..nr {
        let ii = i as isize;
        for j in 0..nz {
            let jj = j as isize;
            let dzr = (b.vr.at(ii, jj + 1) - b.vr.at(ii, jj - 1)) / (2.0 * dz);
            let drz = if i + 1 == nr {
                (b.vz.at(ii, jj) - b.vz.at(ii - 1, jj)) / dr
            } else {
                (b.vz.at(ii + 1, jj) - b.vz.at(ii - 1, jj)) / (2.0 * dr)
            };
            rhs[i * nz + j] = -(dzr - drz);
        }
    }
    // Dirichlet data enters through the ghost 2 B_wall - B_{nr-1}.
    let i = nr - 1;
    let c = 2.0 * g.r_face(i as isize) / (g.r(i as isize) * dr * dr);
    for j in 0..nz {
        rhs[i * nz + j] -= c * wall[j];
    }
    let solver = SpectralPoisson::new(g, Stencil::VectorDirichlet);
    let (x, _) = solver.solve(&rhs, cfg)?;
    let mut s = ScalarField::from_interior(g, Parity::Odd, &x)?;
    s.set_outer_ghost(|j, inner| 2.0 * wall[j] - inner);
    Ok(s)
}
