//! Explicit monotone stepping of the swirl equation
//! `∂_t Γ + b·∇Γ + (2/r) ∂_r Γ = ΔΓ`.
//!
//! The radial operator `∂_r² - (1/r)∂_r = r ∂_r((1/r) ∂_r)` is discretized in
//! flux form with face fluxes `(Γ_{i+1} - Γ_i) / (dr r_{i+1/2})`. The axis face
//! carries `2 (Γ_0 - a) / r_0²`, which pulls the first cell toward the axis
//! value `a` and reproduces `r²` exactly. The drift is upwinded. Every
//! off-diagonal coefficient is nonnegative, so `dt · diag <= 1` makes one step
//! a convex combination of neighbor and boundary values.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::DriftDecomposition;
use crate::error::{Error, Result};
use crate::field::{Parity, ScalarField};
use crate::grid::Grid;
use crate::trajectory::Trajectory;

/// Space-time source or boundary data `f(r, z, t)`.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Data imposed through the ghost row beyond `r_max`.
#[derive(Clone)]
pub enum WallCondition {
    /// Homogeneous Dirichlet: ghost `= -Γ_{nr-1}`.
    Zero,
    /// Ghost row kept as supplied by the initial state.
    Frozen,
    /// Ghost row sampled from `f(r_{nr}, z, t)` every step.
    Exact(SpaceTimeFn),
}

impl std::fmt::Debug for WallCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WallCondition::Zero => f.write_str("Zero"),
            WallCondition::Frozen => f.write_str("Frozen"),
            WallCondition::Exact(_) => f.write_str("Exact(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// `dt = safety / max_cell(diag)`, rounded down to divide the cadence.
    Cfl { safety: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Cfl { safety: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaRunConfig {
    #[serde(default)]
    pub dt: DtPolicy,
    pub t_end: f64,
    pub cadence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaState {
    pub gamma: ScalarField,
    pub time: f64,
}

impl GammaState {
    pub fn new(gamma: ScalarField, time: f64) -> Result<Self> {
        gamma.expect_parity(Parity::Even)?;
        if let Some((i, j)) = gamma.first_non_finite() {
            return Err(Error::InvalidInput(format!("non-finite initial value at cell ({i}, {j})")));
        }
        Ok(Self { gamma, time })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub step: usize,
    pub time: f64,
    pub sup: f64,
    pub inf: f64,
    pub l2: f64,
}

impl StepStats {
    fn of(step: usize, s: &GammaState) -> Self {
        let g = s.gamma.grid();
        let mut l2 = 0.0;
        for i in 0..g.nr() {
            let w = g.cell_volume(i);
            l2 += s.gamma.row(i as isize).iter().map(|v| w * v * v).sum::<f64>();
        }
        Self {
            step,
            time: s.time,
            sup: s.gamma.max(),
            inf: s.gamma.min(),
            l2: l2.sqrt(),
        }
    }
}

/// Trajectory plus per-step extrema and the bounds allowed by the data.
#[derive(Debug, Clone)]
pub struct GammaRun {
    pub trajectory: Trajectory<ScalarField>,
    pub steps: Vec<StepStats>,
    pub dt: f64,
    /// Max and min over initial cells, the axis value and wall data.
    pub data_max: f64,
    pub data_min: f64,
}

impl GammaRun {
    /// Largest violation of `inf_data <= Γ <= sup_data` over every step.
    pub fn max_principle_excess(&self) -> f64 {
        self.steps.iter().fold(0.0f64, |m, s| {
            m.max(s.sup - self.data_max).max(self.data_min - s.inf)
        })
    }
}

#[derive(Debug, Clone)]
struct Coefs {
    e: Vec<f64>,
    w: Vec<f64>,
    n: Vec<f64>,
    s: Vec<f64>,
    diag: Vec<f64>,
}

/// Precomputed stencil for one drift and wall condition.
#[derive(Debug, Clone)]
pub struct GammaSolver {
    grid: Grid,
    wall: WallCondition,
    axis_value: f64,
    coefs: Coefs,
}

impl GammaSolver {
    pub fn new(drift: &DriftDecomposition, wall: WallCondition) -> Self {
        Self::with_axis_value(drift, wall, 0.0)
    }

    /// Solver whose axis face relaxes toward `axis_value` instead of zero.
    pub fn with_axis_value(drift: &DriftDecomposition, wall: WallCondition, axis_value: f64) -> Self {
        let g = *drift.grid();
        let (nr, nz) = (g.nr(), g.nz());
        let (dr, dz) = (g.dr(), g.dz());
        let b = drift.total();
        let n = nr * nz;
        let mut c = Coefs {
            e: vec![0.0; n],
            w: vec![0.0; n],
            n: vec![0.0; n],
            s: vec![0.0; n],
            diag: vec![0.0; n],
        };
        let zero_wall = matches!(wall, WallCondition::Zero);
        for i in 0..nr {
            let ii = i as isize;
            let rc = g.r(ii);
            let de = rc / (dr * dr * g.r_face(ii));
            let dw = if i == 0 {
                4.0 / (dr * dr)
            } else {
                rc / (dr * dr * g.r_face(ii - 1))
            };
            for j in 0..nz {
                let k = i * nz + j;
                let (br, bz) = (b.vr.get(i, j), b.vz.get(i, j));
                let e = de + (-br).max(0.0) / dr;
                // The axis ghost equals Γ_0, so backward upwinding at i = 0 is void.
                let w = dw + if i == 0 { 0.0 } else { br.max(0.0) / dr };
                let nn = 1.0 / (dz * dz) + (-bz).max(0.0) / dz;
                let ss = 1.0 / (dz * dz) + bz.max(0.0) / dz;
                let mut diag = e + w + nn + ss;
                if zero_wall && i + 1 == nr {
                    // Ghost -Γ doubles the pull toward the zero datum.
                    diag += e;
                }
                c.e[k] = e;
                c.w[k] = w;
                c.n[k] = nn;
                c.s[k] = ss;
                c.diag[k] = diag;
            }
        }
        Self {
            grid: g,
            wall,
            axis_value,
            coefs: c,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn axis_value(&self) -> f64 {
        self.axis_value
    }

    /// Largest stable step: `1 / max diag`.
    pub fn dt_limit(&self) -> f64 {
        1.0 / self.coefs.diag.iter().copied().fold(0.0, f64::max)
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
        }
        let nz = self.grid.nz();
        for (k, &d) in self.coefs.diag.iter().enumerate() {
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

    fn refresh_wall(&self, gamma: &mut ScalarField, t: f64) {
        let g = self.grid;
        match &self.wall {
            WallCondition::Zero => gamma.set_outer_ghost(|_, inner| -inner),
            WallCondition::Frozen => {}
            WallCondition::Exact(f) => {
                let r = g.r(g.nr() as isize);
                gamma.set_outer_ghost(|j, _| f(r, g.z(j), t));
            }
        }
        gamma.fill_axis_ghost();
    }

    /// Wall data currently in force, for extremum bookkeeping.
    fn wall_data(&self, gamma: &ScalarField) -> Option<(f64, f64)> {
        match self.wall {
            WallCondition::Zero => Some((0.0, 0.0)),
            _ => {
                let row = gamma.row(self.grid.nr() as isize);
                Some((
                    row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    row.iter().copied().fold(f64::INFINITY, f64::min),
                ))
            }
        }
    }

    /// Discrete right-hand side `LΓ` with ghosts already in place.
    fn rhs_row(&self, gamma: &ScalarField, i: usize, out: &mut [f64]) {
        let nz = self.grid.nz();
        let ii = i as isize;
        let a = self.axis_value;
        for (j, o) in out.iter_mut().enumerate() {
            let k = i * nz + j;
            let jj = j as isize;
            let c = gamma.at(ii, jj);
            let west = if i == 0 { a } else { gamma.at(ii - 1, jj) };
            *o = self.coefs.e[k] * (gamma.at(ii + 1, jj) - c)
                + self.coefs.w[k] * (west - c)
                + self.coefs.n[k] * (gamma.at(ii, jj + 1) - c)
                + self.coefs.s[k] * (gamma.at(ii, jj - 1) - c);
        }
    }

    /// `LΓ` at time `t` after refreshing ghosts.
    pub fn apply(&self, gamma: &ScalarField, t: f64) -> ScalarField {
        let mut g = gamma.clone();
        self.refresh_wall(&mut g, t);
        let nz = self.grid.nz();
        let mut out = ScalarField::zeros(self.grid, Parity::Even);
        out.interior_mut()
            .par_chunks_mut(nz)
            .enumerate()
            .for_each(|(i, row)| self.rhs_row(&g, i, row));
        out.copy_outer_ghost();
        out.fill_axis_ghost();
        out
    }

    pub fn step(&self, state: &GammaState, dt: f64) -> Result<GammaState> {
        self.step_forced(state, dt, None)
    }

    /// Explicit Euler step with optional additive source sampled at the old time.
    pub fn step_forced(&self, state: &GammaState, dt: f64, forcing: Option<&ScalarField>) -> Result<GammaState> {
        self.check_dt(dt)?;
        if let Some(f) = forcing {
            self.grid.ensure_same(f.grid())?;
        }
        let mut cur = state.gamma.clone();
        self.refresh_wall(&mut cur, state.time);
        let nz = self.grid.nz();
        let mut next = cur.clone();
        next.interior_mut()
            .par_chunks_mut(nz)
            .enumerate()
            .for_each(|(i, row)| {
                let mut rhs = vec![0.0; nz];
                self.rhs_row(&cur, i, &mut rhs);
                for (j, v) in row.iter_mut().enumerate() {
                    let src = forcing.map_or(0.0, |f| f.get(i, j));
                    *v += dt * (rhs[j] + src);
                }
            });
        let time = state.time + dt;
        self.refresh_wall(&mut next, time);
        Ok(GammaState { gamma: next, time })
    }

    pub fn run(&self, initial: &GammaState, cfg: &GammaRunConfig) -> Result<GammaRun> {
        self.run_forced(initial, cfg, None)
    }

    /// Runs to `t_end`, recording a snapshot every `cadence`.
    ///
    /// The step is the largest admissible divisor of the cadence, so snapshots
    /// fall exactly on step boundaries.
    pub fn run_forced(
        &self,
        initial: &GammaState,
        cfg: &GammaRunConfig,
        forcing: Option<&SpaceTimeFn>,
    ) -> Result<GammaRun> {
        initial.gamma.expect_parity(Parity::Even)?;
        self.grid.ensure_same(initial.gamma.grid())?;
        let (n_snap, per_snap, dt) = self.schedule(cfg)?;
        let mut state = initial.clone();
        self.refresh_wall(&mut state.gamma, state.time);
        let (wmax, wmin) = self.wall_data(&state.gamma).unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        let data_max = state.gamma.max().max(self.axis_value).max(wmax);
        let data_min = state.gamma.min().min(self.axis_value).min(wmin);
        let mut times = vec![state.time];
        let mut snaps = vec![state.gamma.clone()];
        let mut steps = vec![StepStats::of(0, &state)];
        let t0 = initial.time;
        let mut count = 0usize;
        for s in 1..=n_snap {
            for _ in 0..per_snap {
                let f = forcing.map(|f| {
                    let t = state.time;
                    state.gamma.map_with_coords(Parity::Even, |r, z, _| f(r, z, t))
                });
                state = self.step_forced(&state, dt, f.as_ref())?;
                count += 1;
                // Pin the clock to the schedule to avoid drift from repeated sums.
                state.time = t0 + count as f64 * dt;
                if !state.gamma.is_finite() {
                    return Err(Error::NonFinite {
                        step: count,
                        time: state.time,
                    });
                }
                steps.push(StepStats::of(count, &state));
            }
            state.time = t0 + s as f64 * cfg.cadence;
            times.push(state.time);
            snaps.push(state.gamma.clone());
        }
        Ok(GammaRun {
            trajectory: Trajectory::new(times, snaps)?,
            steps,
            dt,
            data_max,
            data_min,
        })
    }

    /// `(snapshot count, steps per snapshot, dt)` for a run configuration.
    pub fn schedule(&self, cfg: &GammaRunConfig) -> Result<(usize, usize, f64)> {
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
        let per_snap = match cfg.dt {
            DtPolicy::Cfl { safety } => {
                if !(safety > 0.0 && safety <= 1.0) {
                    return Err(Error::InvalidInput(format!("CFL safety {safety} must lie in (0, 1]")));
                }
                (cfg.cadence / (safety * self.dt_limit())).ceil().max(1.0) as usize
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
        self.check_dt(dt)?;
        Ok((n_snap, per_snap, dt))
    }
}
