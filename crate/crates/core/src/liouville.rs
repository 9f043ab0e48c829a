//! Blow-up rescaling and rigidity diagnostics for axisymmetric velocity trajectories.
//!
//! A rescaling about `x_k = (r_k, θ = 0, z_k)` is sampled on the meridional
//! half-plane `θ = 0` of the target grid: target node `(r', z')` maps to the
//! source point `(r_k + r'/Q, z_k + z'/Q)` with `z' = z - L_target/2`. Components
//! are stored as `(x', y', z')` Cartesian components, which at `θ = 0` are the
//! cylindrical `(v^r, v^θ, v^z)` of the source. When `r_k = 0` the result is again
//! an axisymmetric field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Parity, ScalarField, VectorFieldCyl};
use crate::grid::{Ball, Grid};
use crate::ns::{b_of, compute_stream};
use crate::poisson::PoissonSolveConfig;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupCandidate {
    pub snapshot: usize,
    pub t: f64,
    pub r: f64,
    pub z: f64,
    /// `|v(x_k, t_k)|`.
    pub q: f64,
    /// `Q_k` over the running maximum of `|v|`.
    pub gamma: f64,
}

impl BlowupCandidate {
    /// Rescaling center that is not drawn from a trajectory scan.
    pub fn anchor(r: f64, z: f64, t: f64, q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) || !(r >= 0.0) {
            return Err(Error::InvalidInput(format!("rescaling needs Q > 0 and r >= 0, got Q = {q}, r = {r}")));
        }
        Ok(Self {
            snapshot: 0,
            t,
            r,
            z,
            q,
            gamma: 1.0,
        })
    }

    pub fn rk_qk(&self) -> f64 {
        self.r * self.q
    }
}

/// Scans snapshots in time order and emits one candidate per snapshot whose
/// maximum speed reaches `gamma_min` times the running maximum and exceeds the
/// previous candidate. Ties are broken by smallest `(r, z)`.
pub fn select_candidates(traj: &Trajectory<VectorFieldCyl>, gamma_min: f64) -> Result<Vec<BlowupCandidate>> {
    if !(gamma_min > 0.0 && gamma_min <= 1.0) {
        return Err(Error::OutOfDomain {
            what: "gamma_min (must lie in (0, 1])",
            value: gamma_min,
        });
    }
    let mut out: Vec<BlowupCandidate> = Vec::new();
    let mut running = 0.0f64;
    for (k, v) in traj.snapshots().iter().enumerate() {
        let g = v.grid();
        let mag = v.magnitude_sq();
        // First strict maximum in (i, j) order, i.e. smallest r then z.
        let (mut best, mut at) = (0.0f64, 0usize);
        for (c, &m) in mag.iter().enumerate() {
            if m > best {
                best = m;
                at = c;
            }
        }
        let q = best.sqrt();
        running = running.max(q);
        if q == 0.0 || q < gamma_min * running {
            continue;
        }
        if let Some(last) = out.last() {
            if q <= last.q * (1.0 + 1e-9) {
                continue;
            }
        }
        let (i, j) = (at / g.nz(), at % g.nz());
        out.push(BlowupCandidate {
            snapshot: k,
            t: traj.times()[k],
            r: g.r(i as isize),
            z: g.z(j),
            q,
            gamma: q / running,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RescaledTrajectory {
    pub candidate: BlowupCandidate,
    /// Rescaled times are `Q²(t_source - t_k) <= 0`.
    pub trajectory: Trajectory<VectorFieldCyl>,
}

impl RescaledTrajectory {
    pub fn grid(&self) -> &Grid {
        self.trajectory.last().grid()
    }

    /// Distance of target node `i` from the source axis, in rescaled units.
    pub fn axis_distance(&self, i: usize) -> f64 {
        self.candidate.rk_qk() + self.grid().r(i as isize)
    }

    pub fn sup_magnitude(&self) -> f64 {
        self.trajectory
            .snapshots()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.max_magnitude()))
    }

    /// `|v^{(k)}|` at the rescaling center at rescaled time 0.
    pub fn center_magnitude(&self) -> Result<f64> {
        let v = self.trajectory.last();
        let zc = 0.5 * self.grid().z_len();
        let c = [
            v.vr.interpolate(0.0, zc)?,
            v.vtheta.interpolate(0.0, zc)?,
            v.vz.interpolate(0.0, zc)?,
        ];
        Ok(c.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// Distance to the source axis times `v^θ`, equal to `Γ` at the mapped point.
    pub fn gamma_field(&self, k: usize) -> ScalarField {
        let v = &self.trajectory.snapshots()[k];
        let rq = self.candidate.rk_qk();
        v.vtheta.map_with_coords(Parity::Even, |r, _, u| (rq + r) * u)
    }
}

/// `v^{(k)}(x, t) = v(x_k + x/Q, t_k + t/Q²)/Q` on `target` for `t ∈ [-window, 0]`,
/// sampled at the mapped source snapshot times.
pub fn rescale(
    traj: &Trajectory<VectorFieldCyl>,
    c: &BlowupCandidate,
    target: Grid,
    window: f64,
) -> Result<RescaledTrajectory> {
    if !(window >= 0.0 && window.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "rescaled window",
            value: window,
        });
    }
    let q = c.q;
    let src_grid = *traj.snapshots()[0].grid();
    let r_far = c.r + target.r_max() / q;
    if r_far > src_grid.r_max() * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain {
            what: "rescaled target radius beyond the source wall",
            value: r_far,
        });
    }
    let from = c.t - window / (q * q);
    traj.covers(from, c.t)?;
    let times: Vec<f64> = if traj.is_steady() {
        vec![c.t]
    } else {
        let mut ts: Vec<f64> = traj
            .times()
            .iter()
            .copied()
            .filter(|&s| s >= from - 1e-12 * q.max(1.0) && s <= c.t + 1e-12)
            .collect();
        if ts.last().is_none_or(|&s| (s - c.t).abs() > 1e-12) {
            ts.push(c.t);
            ts.retain(|&s| s <= c.t);
        }
        ts
    };
    let zc = 0.5 * target.z_len();
    let sample = |s: f64| -> Result<VectorFieldCyl> {
        let w = traj.sample_weights(s)?;
        let mut comps = Vec::with_capacity(3);
        for (n, parity) in VectorFieldCyl::PARITIES.iter().enumerate() {
            let mut vals = Vec::with_capacity(target.cells());
            for i in 0..target.nr() {
                let rs = c.r + target.r(i as isize) / q;
                for j in 0..target.nz() {
                    let zs = c.z + (target.z(j) - zc) / q;
                    let mut acc = 0.0;
                    for &(k, wt) in &w {
                        if wt != 0.0 {
                            acc += wt * traj.snapshots()[k].components()[n].interpolate(rs, zs)?;
                        }
                    }
                    vals.push(acc / q);
                }
            }
            comps.push(ScalarField::from_interior(target, *parity, &vals)?);
        }
        let vz = comps.pop().unwrap_or_else(|| ScalarField::zeros(target, Parity::Even));
        let vt = comps.pop().unwrap_or_else(|| ScalarField::zeros(target, Parity::Odd));
        let vr = comps.pop().unwrap_or_else(|| ScalarField::zeros(target, Parity::Odd));
        VectorFieldCyl::new(vr, vt, vz)
    };
    let snaps = times.iter().map(|&s| sample(s)).collect::<Result<Vec<_>>>()?;
    let trajectory = if traj.is_steady() {
        Trajectory::steady(snaps.into_iter().next().expect("one snapshot"))
    } else {
        Trajectory::new(times.iter().map(|s| q * q * (s - c.t)).collect(), snaps)?
    };
    Ok(RescaledTrajectory {
        candidate: *c,
        trajectory,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwirlReport {
    pub sup_swirl: f64,
    /// `C/(Q_k r_k)`, infinite for an axis-centered rescaling.
    pub bound: f64,
    pub within_bound: bool,
}

/// `sup |v^{(k)}·e_θ|` over the window against `C/(Q_k r_k)`.
pub fn swirl_residual(rt: &RescaledTrajectory, c: f64) -> SwirlReport {
    let sup_swirl = rt
        .trajectory
        .snapshots()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.vtheta.sup_abs()));
    let rq = rt.candidate.rk_qk();
    let bound = if rq > 0.0 { c / rq } else { f64::INFINITY };
    SwirlReport {
        sup_swirl,
        bound,
        within_bound: sup_swirl <= bound,
    }
}

/// Root-mean-square of `(n·∇)v^{(k)}` over target nodes and snapshots.
///
/// `n = (n_x', n_y', n_z')` is taken in the rescaled Cartesian frame; the
/// out-of-plane derivative uses axisymmetry of the source,
/// `∂_y' v = (-v^θ, v^r, 0)/ρ'` with `ρ'` the distance to the source axis.
pub fn planar_residual(rt: &RescaledTrajectory, n: [f64; 3]) -> Result<f64> {
    let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("direction must be a unit vector, |n| = {norm}")));
    }
    let g = *rt.grid();
    let (mut acc, mut count) = (0.0, 0usize);
    for v in rt.trajectory.snapshots() {
        let comps = [&v.vr, &v.vtheta, &v.vz];
        for i in 0..g.nr() {
            let rho = rt.axis_distance(i);
            for j in 0..g.nz() {
                let jj = j as isize;
                let mut d = [0.0; 3];
                for (m, f) in comps.iter().enumerate() {
                    let dx = if i == 0 {
                        (f.get(1, j) - f.get(0, j)) / g.dr()
                    } else if i + 1 == g.nr() {
                        (f.get(i, j) - f.get(i - 1, j)) / g.dr()
                    } else {
                        (f.get(i + 1, j) - f.get(i - 1, j)) / (2.0 * g.dr())
                    };
                    let dz = (f.get(i, g.wrap_j(jj + 1)) - f.get(i, g.wrap_j(jj - 1))) / (2.0 * g.dz());
                    d[m] = n[0] * dx + n[2] * dz;
                }
                if n[1] != 0.0 {
                    d[0] -= n[1] * v.vtheta.get(i, j) / rho;
                    d[1] += n[1] * v.vr.get(i, j) / rho;
                }
                acc += d.iter().map(|x| x * x).sum::<f64>();
                count += 1;
            }
        }
    }
    Ok((acc / count as f64).sqrt())
}

/// Largest over snapshots of the summed spatial standard deviations of the
/// three components.
pub fn constancy_residual(rt: &RescaledTrajectory) -> f64 {
    let std = |f: &ScalarField| {
        // Shifted by the first value so that constants give exactly zero.
        let v = f.interior();
        let n = v.len() as f64;
        let mean = v.iter().map(|x| x - v[0]).sum::<f64>() / n;
        (v.iter().map(|x| (x - v[0] - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    rt.trajectory
        .snapshots()
        .iter()
        .map(|v| std(&v.vr) + std(&v.vtheta) + std(&v.vz))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanValueDefect {
    pub radius: f64,
    pub ball_average: f64,
    pub center_value: f64,
    /// `|average - center|`.
    pub defect: f64,
    /// `defect / max_B |B|`, zero when `B` vanishes on the ball.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanValueReport {
    pub center_z: f64,
    /// `max |ΔB|` over the largest ball.
    pub laplacian_residual: f64,
    /// Raised when `max |ΔB| R₀² > 10⁻³ max |B|` on the largest ball.
    pub non_harmonic: bool,
    pub defects: Vec<MeanValueDefect>,
    pub max_relative_defect: f64,
}

/// Ball averages of `B` about `(0, L/2)` against its axis value, on dyadic radii
/// from a quarter of the domain down to four cells.
pub fn harmonic_mean_value_check(b: &ScalarField) -> Result<MeanValueReport> {
    let g = *b.grid();
    let f = b.axis_fill();
    let zc = 0.5 * g.z_len();
    let r0 = 0.5 * g.r_max().min(0.5 * g.z_len());
    let h = g.dr().max(g.dz());
    let big = Ball::axial(zc, r0);
    let cells = big.cells(&g);
    let mut lap_max = 0.0f64;
    let mut sup = 0.0f64;
    for &(i, j, _) in &cells {
        let (ii, jj) = (i as isize, j as isize);
        let r = g.r(ii);
        let (c, e, w) = (f.at(ii, jj), f.at(ii + 1, jj), f.at(ii - 1, jj));
        let (n, s) = (f.get(i, g.wrap_j(jj + 1)), f.get(i, g.wrap_j(jj - 1)));
        let lap = (e - 2.0 * c + w) / (g.dr() * g.dr())
            + (e - w) / (2.0 * g.dr() * r)
            + (n - 2.0 * c + s) / (g.dz() * g.dz());
        lap_max = lap_max.max(lap.abs());
        sup = sup.max(c.abs());
    }
    let center = axis_value(&f, zc);
    let mut defects = Vec::new();
    let mut rho = r0;
    while rho >= 4.0 * h * (1.0 - 1e-12) {
        let ball = Ball::axial(zc, rho);
        let avg = f.ball_mean(&ball)?;
        let scale = ball
            .cells(&g)
            .iter()
            .fold(0.0f64, |m, &(i, j, _)| m.max(f.get(i, j).abs()));
        let defect = (avg - center).abs();
        defects.push(MeanValueDefect {
            radius: rho,
            ball_average: avg,
            center_value: center,
            defect,
            relative: if scale > 0.0 { defect / scale } else { 0.0 },
        });
        rho *= 0.5;
    }
    let max_relative_defect = defects.iter().fold(0.0f64, |m, d| m.max(d.relative));
    Ok(MeanValueReport {
        center_z: zc,
        laplacian_residual: lap_max,
        non_harmonic: lap_max * r0 * r0 > 1e-3 * sup,
        defects,
        max_relative_defect,
    })
}

/// `B(0, z)` by even quadratic extrapolation in `r` and linear interpolation in `z`.
fn axis_value(f: &ScalarField, z: f64) -> f64 {
    let g = f.grid();
    let q = z.rem_euclid(g.z_len()) / g.dz() - 0.5;
    let j0 = q.floor();
    let t = q - j0;
    let trace = |j: isize| {
        let j = g.wrap_j(j);
        f.get(0, j) - (f.get(1, j) - f.get(0, j)) / 8.0
    };
    let j0 = j0 as isize;
    (1.0 - t) * trace(j0) + t * trace(j0 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    /// `r_k Q_k` stays below the threshold.
    Bounded,
    /// `r_k Q_k` exceeds the threshold.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiouvilleConfig {
    pub gamma_min: f64,
    pub case_threshold: f64,
    /// Swirl bound constant `C` in `C/(Q_k r_k)`.
    pub swirl_constant: f64,
    /// Cells per side of the rescaled target grid.
    pub target_cells: usize,
    /// Rescaled time window.
    pub window: f64,
}

impl Default for LiouvilleConfig {
    fn default() -> Self {
        Self {
            gamma_min: 0.9,
            case_threshold: 10.0,
            swirl_constant: 1.0,
            target_cells: 32,
            window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiouvilleReport {
    pub candidates: Vec<BlowupCandidate>,
    pub rk_qk: Option<f64>,
    pub case_label: Option<CaseLabel>,
    pub swirl_residual: Option<f64>,
    pub planar_residual: Option<f64>,
    pub constancy_residual: Option<f64>,
    pub mean_value_defect: f64,
}

/// Candidate scan, rescaling about the last candidate, and the residuals of the
/// rescaled field; the mean-value defect is measured on the stream function of
/// the final state.
pub fn liouville_report(traj: &Trajectory<VectorFieldCyl>, cfg: &LiouvilleConfig) -> Result<LiouvilleReport> {
    let candidates = select_candidates(traj, cfg.gamma_min)?;
    let stream = compute_stream(&b_of(traj.last()), &PoissonSolveConfig::default())?;
    let mean_value_defect = harmonic_mean_value_check(&stream)?.max_relative_defect;
    let mut rep = LiouvilleReport {
        candidates: candidates.clone(),
        rk_qk: None,
        case_label: None,
        swirl_residual: None,
        planar_residual: None,
        constancy_residual: None,
        mean_value_defect,
    };
    let Some(c) = candidates.last() else {
        return Ok(rep);
    };
    let rq = c.rk_qk();
    rep.rk_qk = Some(rq);
    rep.case_label = Some(if rq <= cfg.case_threshold {
        CaseLabel::Bounded
    } else {
        CaseLabel::Unbounded
    });
    let src = traj.last().grid();
    let reach = (src.r_max() - c.r).min(0.5 * src.z_len());
    let window = cfg.window.min(c.q * c.q * (c.t - traj.first_time()));
    let target = Grid::new(cfg.target_cells, cfg.target_cells, c.q * reach, 2.0 * c.q * reach)?;
    let rt = rescale(traj, c, target, window)?;
    rep.swirl_residual = Some(swirl_residual(&rt, cfg.swirl_constant).sup_swirl);
    rep.planar_residual = Some(planar_residual(&rt, [0.0, 1.0, 0.0])?);
    rep.constancy_residual = Some(constancy_residual(&rt));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rigid(g: Grid, omega: f64) -> VectorFieldCyl {
        VectorFieldCyl::from_fn(g, |r, _| [0.0, omega * r, 0.0])
    }

    #[test]
    fn zero_field_has_no_candidates() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let t = Trajectory::steady(VectorFieldCyl::zeros(g));
        assert!(select_candidates(&t, 0.9).unwrap().is_empty());
        assert!(select_candidates(&t, 0.0).is_err());
    }

    #[test]
    fn rigid_rotation_selects_outermost_cell_once() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let v = rigid(g, 2.0);
        let t = Trajectory::new(vec![0.0, 0.1, 0.2], vec![v.clone(), v.clone(), v]).unwrap();
        let c = select_candidates(&t, 0.9).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].snapshot, 0);
        assert_eq!(c[0].r, g.r(15));
        assert_eq!(c[0].z, g.z(0));
        assert!((c[0].q - 2.0 * g.r(15)).abs() < 1e-14);
    }

    #[test]
    fn growing_maximum_selects_the_last_snapshot() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let snaps: Vec<_> = (1..=4).map(|k| rigid(g, k as f64)).collect();
        let t = Trajectory::new(vec![0.0, 1.0, 2.0, 3.0], snaps).unwrap();
        let c = select_candidates(&t, 0.9).unwrap();
        assert_eq!(c.last().unwrap().snapshot, 3);
        assert!(c.iter().all(|x| x.gamma == 1.0));
    }

    #[test]
    fn unit_rescale_about_axis_is_identity_on_nodes() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let v = VectorFieldCyl::from_fn(g, |r, z| {
            [r * (2.0 * PI * z).sin(), r * r, (2.0 * PI * z).cos() * (1.0 - r * r)]
        });
        let traj = Trajectory::steady(v.clone());
        let c = BlowupCandidate::anchor(0.0, 0.5, 0.0, 1.0).unwrap();
        let rt = rescale(&traj, &c, g, 0.0).unwrap();
        assert!(rt.trajectory.last().max_abs_diff(&v).unwrap() <= 1e-12);
    }

    #[test]
    fn rescaled_rigid_rotation_is_rigid_rotation() {
        let g = Grid::new(32, 32, 1.0, 1.0).unwrap();
        let traj = Trajectory::steady(rigid(g, 3.0));
        let c = BlowupCandidate::anchor(0.0, 0.5, 0.0, 2.0).unwrap();
        let target = Grid::new(32, 32, 2.0, 2.0).unwrap();
        let rt = rescale(&traj, &c, target, 0.0).unwrap();
        // (1/Q) Ω (r/Q) = (Ω/Q²) r.
        let exact = rigid(target, 3.0 / 4.0);
        assert!(rt.trajectory.last().max_abs_diff(&exact).unwrap() < 1e-12);
        let s = swirl_residual(&rt, 1.0);
        assert!((s.sup_swirl - 0.75 * target.r(31)).abs() < 1e-12);
        assert_eq!(s.bound, f64::INFINITY);
    }

    #[test]
    fn rescale_rejects_missing_coverage() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let v = rigid(g, 1.0);
        let traj = Trajectory::new(vec![0.0, 0.1], vec![v.clone(), v]).unwrap();
        let c = BlowupCandidate::anchor(0.0, 0.5, 0.1, 1.0).unwrap();
        assert!(rescale(&traj, &c, g, 1.0).is_err());
        let wide = Grid::new(16, 16, 2.0, 1.0).unwrap();
        assert!(rescale(&traj, &c, wide, 0.05).is_err());
        let rt = rescale(&traj, &c, g, 0.1).unwrap();
        assert_eq!(rt.trajectory.times(), &[-0.1, 0.0]);
    }

    #[test]
    fn swirl_free_source_has_zero_swirl_residual() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let v = VectorFieldCyl::from_fn(g, |r, z| [r * (2.0 * PI * z).sin(), 0.0, 1.0]);
        let c = BlowupCandidate::anchor(0.3, 0.5, 0.0, 2.0).unwrap();
        let target = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let rt = rescale(&Trajectory::steady(v), &c, target, 0.0).unwrap();
        assert_eq!(swirl_residual(&rt, 1.0).sup_swirl, 0.0);
    }

    #[test]
    fn planar_residual_of_off_axis_rigid_rotation() {
        let g = Grid::new(32, 32, 1.0, 1.0).unwrap();
        let c = BlowupCandidate::anchor(0.5, 0.5, 0.0, 2.0).unwrap();
        let target = Grid::new(16, 16, 0.5, 1.0).unwrap();
        let rt = rescale(&Trajectory::steady(rigid(g, 1.0)), &c, target, 0.0).unwrap();
        // ∂_y' of (Ω/Q)(-Y, X, 0) is (-Ω/Q², 0, 0).
        let p = planar_residual(&rt, [0.0, 1.0, 0.0]).unwrap();
        assert!((p - 0.25).abs() < 1e-12, "{p}");
        // Constant along z'.
        assert!(planar_residual(&rt, [0.0, 0.0, 1.0]).unwrap() < 1e-12);
        assert!(planar_residual(&rt, [0.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn constancy_of_uniform_field_is_zero() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let snaps: Vec<_> = (0..3)
            .map(|k| VectorFieldCyl::from_fn(g, move |_, _| [0.0, 0.0, (0.1 * k as f64).sin()]))
            .collect();
        let traj = Trajectory::new(vec![0.0, 0.1, 0.2], snaps).unwrap();
        let c = BlowupCandidate::anchor(0.0, 0.5, 0.2, 1.0).unwrap();
        let rt = rescale(&traj, &c, g, 0.2).unwrap();
        assert_eq!(constancy_residual(&rt), 0.0);
        let gen = rescale(&Trajectory::steady(rigid(g, 1.0)), &c, g, 0.0).unwrap();
        assert!(constancy_residual(&gen) > 0.0);
    }

    #[test]
    fn mean_value_check_on_constant_linear_and_quadratic() {
        let g = Grid::new(64, 64, 1.0, 1.0).unwrap();
        let c = harmonic_mean_value_check(&ScalarField::constant(g, Parity::Even, 2.0)).unwrap();
        assert_eq!(c.max_relative_defect, 0.0);
        assert!(!c.non_harmonic);
        let z = harmonic_mean_value_check(&ScalarField::from_fn(g, Parity::Even, |_, z| z)).unwrap();
        assert!(z.max_relative_defect < 0.02, "{z:?}");
        assert!(!z.non_harmonic);
        let q = harmonic_mean_value_check(&ScalarField::from_fn(g, Parity::Even, |r, _| r * r)).unwrap();
        assert!(q.non_harmonic);
        for d in &q.defects {
            assert!((d.defect / (0.4 * d.radius * d.radius) - 1.0).abs() < 0.1, "{d:?}");
        }
    }
}
