//! Scale-invariant drift norms and oscillation moduli.

use serde::{Deserialize, Serialize, Serializer};

use crate::drift::DriftDecomposition;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorFieldCyl};
use crate::grid::{Ball, Grid};
use crate::trajectory::{ParabolicCylinder, Trajectory};

/// Space-time anchor `(r = 0, z0, t0)` of the cylinders `P(R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub z0: f64,
    pub t0: f64,
}

impl Anchor {
    pub fn cylinder(&self, radius: f64) -> Result<ParabolicCylinder> {
        ParabolicCylinder::axial(self.z0, self.t0, radius)
    }
}

/// Radii `R_j = r0 2^{-j}` for `j = 0..=levels`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicScaleSet {
    pub r0: f64,
    pub levels: usize,
}

impl DyadicScaleSet {
    pub const MIN_LEVELS: usize = 3;

    pub fn new(r0: f64, levels: usize) -> Result<Self> {
        let s = Self { r0, levels };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "largest scale",
                value: self.r0,
            });
        }
        if self.levels < Self::MIN_LEVELS {
            return Err(Error::InsufficientScales {
                usable: self.levels + 1,
                needed: Self::MIN_LEVELS + 1,
            });
        }
        Ok(())
    }

    /// Errors unless the largest radius stays within a quarter of the wall radius.
    pub fn ensure_diagnostic_safe(&self, grid: &Grid) -> Result<()> {
        if self.r0 > 0.25 * grid.r_max() * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain {
                what: "largest scale (must be <= r_max/4)",
                value: self.r0,
            });
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..=self.levels).map(|j| self.r0 / (1u64 << j) as f64).collect()
    }

    /// The same set with every radius multiplied by `f`.
    pub fn scaled(&self, f: f64) -> Self {
        Self {
            r0: self.r0 * f,
            levels: self.levels,
        }
    }
}

fn energy_density(v: &VectorFieldCyl, i: usize, j: usize) -> f64 {
    let (a, b, c) = (v.vr.get(i, j), v.vtheta.get(i, j), v.vz.get(i, j));
    a * a + b * b + c * c
}

/// `(1/R) ∫_{B_2R \ B_{R/8}} |v|² dx` with both balls centered at `(0, z0)`.
pub fn hollow_energy(v: &VectorFieldCyl, z0: f64, radius: f64) -> Result<f64> {
    let outer = Ball::axial(z0, 2.0 * radius);
    outer.validate(v.grid())?;
    let inner = Ball::axial(z0, radius / 8.0);
    let g = v.grid();
    let sum = |b: &Ball| -> f64 {
        b.cells(g)
            .into_iter()
            .map(|(i, j, w)| w * energy_density(v, i, j))
            .sum()
    };
    Ok((sum(&outer) - sum(&inner)) / radius)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HseReport {
    pub value: f64,
    /// `(R, sup over the window)` per scale.
    pub per_scale: Vec<(f64, f64)>,
}

/// Hollowed scaled energy: max over scales and over `t ∈ (t0 - R², t0]`.
pub fn hollowed_scaled_energy(
    b1: &Trajectory<VectorFieldCyl>,
    scales: &DyadicScaleSet,
    anchor: Anchor,
) -> Result<HseReport> {
    scales.validate()?;
    let mut per_scale = Vec::new();
    for r in scales.radii() {
        let idx = b1.window(anchor.t0 - r * r, anchor.t0)?;
        let mut best = 0.0f64;
        for k in idx {
            best = best.max(hollow_energy(&b1.snapshots()[k], anchor.z0, r)?);
        }
        per_scale.push((r, best));
    }
    let value = per_scale.iter().fold(0.0f64, |m, s| m.max(s.1));
    Ok(HseReport { value, per_scale })
}

/// Ball family used by the discrete BMO estimator.
///
/// Radii halve from `rho_max` while they span at least `min_cells` cells;
/// centers sit on a lattice of step `rho/2` and every ball stays inside
/// `r <= region_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BmoFamily {
    pub rho_max: f64,
    pub region_r: f64,
    pub min_cells: usize,
}

impl BmoFamily {
    pub fn for_grid(grid: &Grid) -> Self {
        Self {
            rho_max: 0.25 * grid.r_max().min(grid.z_len()),
            region_r: 0.5 * grid.r_max(),
            min_cells: 4,
        }
    }

    pub fn balls(&self, grid: &Grid) -> Vec<Ball> {
        let h = grid.dr().max(grid.dz());
        let mut out = Vec::new();
        let mut rho = self.rho_max;
        while rho >= self.min_cells as f64 * h * (1.0 - 1e-12) {
            let step = 0.5 * rho;
            let nr = ((self.region_r - rho) / step + 1e-9).floor();
            let nzc = (grid.z_len() / step).round() as usize;
            if nr >= 0.0 {
                for a in 0..=nr as usize {
                    for c in 0..nzc {
                        out.push(Ball {
                            center_r: a as f64 * step,
                            center_z: c as f64 * step,
                            radius: rho,
                        });
                    }
                }
            }
            rho *= 0.5;
        }
        out
    }
}

/// Mean of `|f - mean_B f|` over one ball, shifted by a reference value so that
/// constants give exactly zero.
pub fn mean_oscillation(f: &ScalarField, ball: &Ball) -> Option<f64> {
    let cells = ball.cells(f.grid());
    let (i0, j0, _) = *cells.first()?;
    let shift = f.get(i0, j0);
    let vol: f64 = cells.iter().map(|c| c.2).sum();
    let mean = cells.iter().map(|&(i, j, w)| w * (f.get(i, j) - shift)).sum::<f64>() / vol;
    Some(
        cells
            .iter()
            .map(|&(i, j, w)| w * (f.get(i, j) - shift - mean).abs())
            .sum::<f64>()
            / vol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BmoReport {
    pub value: f64,
    pub balls: usize,
    pub argmax_center_r: f64,
    pub argmax_center_z: f64,
    pub argmax_radius: f64,
}

/// Largest mean oscillation over the family; a lower bound for the true seminorm.
pub fn bmo_seminorm_with(f: &ScalarField, family: &BmoFamily) -> BmoReport {
    let balls = family.balls(f.grid());
    let mut best = BmoReport {
        value: 0.0,
        balls: balls.len(),
        argmax_center_r: 0.0,
        argmax_center_z: 0.0,
        argmax_radius: 0.0,
    };
    for b in &balls {
        if let Some(m) = mean_oscillation(f, b) {
            if m > best.value {
                best.value = m;
                best.argmax_center_r = b.center_r;
                best.argmax_center_z = b.center_z;
                best.argmax_radius = b.radius;
            }
        }
    }
    best
}

pub fn bmo_seminorm(f: &ScalarField) -> BmoReport {
    bmo_seminorm_with(f, &BmoFamily::for_grid(f.grid()))
}

/// `max r |b3|` over cells and snapshots.
pub fn sup_r_abs<'a>(b3: impl IntoIterator<Item = &'a VectorFieldCyl>) -> f64 {
    let mut m = 0.0f64;
    for v in b3 {
        let g = v.grid();
        let nz = g.nz();
        for (k, e) in v.magnitude_sq().into_iter().enumerate() {
            m = m.max(g.r((k / nz) as isize) * e.sqrt());
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ENormReport {
    pub hse: f64,
    pub bmo: f64,
    pub sup_rb3: f64,
    pub total: f64,
}

/// `HSE(b1) + ‖B‖_BMO + sup r|b3|` for a time-independent drift.
pub fn e_norm(b: &DriftDecomposition, scales: &DyadicScaleSet, z0: f64) -> Result<ENormReport> {
    let hse = hollowed_scaled_energy(&Trajectory::steady(b.b1().clone()), scales, Anchor { z0, t0: 0.0 })?.value;
    let bmo = bmo_seminorm(b.stream()).value;
    let sup_rb3 = sup_r_abs([b.b3()]);
    Ok(ENormReport {
        hse,
        bmo,
        sup_rb3,
        total: hse + bmo + sup_rb3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleEntry {
    pub radius: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    #[serde(rename = "J")]
    pub j: f64,
    /// Cells times snapshots inside the cylinder.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationProfile {
    pub entries: Vec<ScaleEntry>,
}

/// Exact discrete `inf`/`sup` of `f` over `P(R)` for every scale.
pub fn oscillation_profile(
    traj: &Trajectory<ScalarField>,
    scales: &DyadicScaleSet,
    anchor: Anchor,
) -> Result<OscillationProfile> {
    scales.validate()?;
    let mut entries = Vec::new();
    for r in scales.radii() {
        let cyl = anchor.cylinder(r)?;
        let ball = cyl.ball();
        let f0 = &traj.snapshots()[0];
        ball.validate(f0.grid())?;
        let cells = ball.cells(f0.grid());
        let idx = traj.window(cyl.t_from(), cyl.t0)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &k in &idx {
            let f = &traj.snapshots()[k];
            for &(i, j, _) in &cells {
                let v = f.get(i, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if cells.is_empty() {
            return Err(Error::Undefined(format!("cylinder of radius {r} contains no cells")));
        }
        entries.push(ScaleEntry {
            radius: r,
            m: lo,
            big_m: hi,
            j: hi - lo,
            samples: cells.len() * idx.len(),
        });
    }
    Ok(OscillationProfile { entries })
}

fn ser_inf_as_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderFit {
    /// `+inf` (serialized as `null`) when every oscillation vanishes.
    #[serde(serialize_with = "ser_inf_as_null")]
    pub alpha: f64,
    pub intercept: f64,
    pub residual: f64,
    pub scales_used: usize,
}

/// Minimum cells x snapshots for a scale to enter the fit.
pub const MIN_FIT_SAMPLES: usize = 64;

/// Least-squares slope of `log J_R` against `log R`.
pub fn holder_fit(profile: &OscillationProfile) -> Result<HolderFit> {
    let resolved: Vec<&ScaleEntry> = profile
        .entries
        .iter()
        .filter(|e| e.samples >= MIN_FIT_SAMPLES)
        .collect();
    if !resolved.is_empty() && resolved.iter().all(|e| e.j == 0.0) {
        return Ok(HolderFit {
            alpha: f64::INFINITY,
            intercept: 0.0,
            residual: 0.0,
            scales_used: resolved.len(),
        });
    }
    let pts: Vec<(f64, f64)> = resolved
        .iter()
        .filter(|e| e.j > 0.0)
        .map(|e| (e.radius.ln(), e.j.ln()))
        .collect();
    fit_log_log(&pts)
}

/// Slope and intercept of a least-squares line through `(log R, log J)` points.
pub fn fit_log_log(pts: &[(f64, f64)]) -> Result<HolderFit> {
    if pts.len() < 3 {
        return Err(Error::InsufficientScales {
            usable: pts.len(),
            needed: 3,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - alpha * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(HolderFit {
        alpha,
        intercept,
        residual,
        scales_used: pts.len(),
    })
}

/// `‖f - f̄‖_{L^p(B)} / (‖f‖_BMO |B|^{1/p})`.
pub fn john_nirenberg_ratio(f: &ScalarField, p: f64, ball: &Ball, family: &BmoFamily) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("exponent p = {p} must be >= 1")));
    }
    ball.validate(f.grid())?;
    let bmo = bmo_seminorm_with(f, family).value;
    if bmo == 0.0 {
        return Err(Error::Undefined("BMO seminorm vanishes".into()));
    }
    let cells = ball.cells(f.grid());
    let vol: f64 = cells.iter().map(|c| c.2).sum();
    let mean = cells.iter().map(|&(i, j, w)| w * f.get(i, j)).sum::<f64>() / vol;
    let lp = cells
        .iter()
        .map(|&(i, j, w)| w * (f.get(i, j) - mean).abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    Ok(lp / (bmo * vol.powf(1.0 / p)))
}
