//! Numerical certificates for the parabolic estimates satisfied by `Γ = r v^θ`.
//!
//! Every check reports a measured ratio; thresholds are configuration.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::drift::{B1Spec, B2Spec, B3Spec, DriftDecomposition, DriftSpec};
use crate::error::{Error, Result};
use crate::field::{Parity, ScalarField};
use crate::grid::{Ball, Grid};
use crate::norms::{oscillation_profile, Anchor, DyadicScaleSet, OscillationProfile};
use crate::trajectory::{ParabolicCylinder, Trajectory};

/// Minimum snapshots inside any cylinder that carries a time integral.
pub const MIN_SNAPSHOTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Nothing to test, e.g. all oscillations vanish.
    Vacuous,
    /// A hypothesis gate failed, so no verdict is issued.
    HypothesisFailed,
    /// Measurement only.
    Reported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
    /// `Some(lhs <= rhs (1 + slack))` for decided checks, `None` otherwise.
    pub pass: Option<bool>,
    pub verdict: Verdict,
    pub slack: f64,
    pub scale: Option<f64>,
    pub config: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckEntry {
    fn base(name: &str, lhs: f64, rhs: f64, verdict: Verdict, slack: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            ratio: (rhs != 0.0).then(|| lhs / rhs),
            pass: None,
            verdict,
            slack,
            scale: None,
            config: BTreeMap::new(),
            note: None,
        }
    }

    /// Decided check: passes iff `lhs <= rhs (1 + slack)`.
    pub fn compare(name: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        let ok = lhs <= rhs * (1.0 + slack);
        let mut e = Self::base(name, lhs, rhs, if ok { Verdict::Pass } else { Verdict::Fail }, slack);
        e.pass = Some(ok);
        e
    }

    pub fn reported(name: &str, lhs: f64, rhs: f64) -> Self {
        Self::base(name, lhs, rhs, Verdict::Reported, 0.0)
    }

    pub fn vacuous(name: &str) -> Self {
        Self::base(name, 0.0, 0.0, Verdict::Vacuous, 0.0)
    }

    pub fn hypothesis_failed(name: &str, lhs: f64, rhs: f64) -> Self {
        Self::base(name, lhs, rhs, Verdict::HypothesisFailed, 0.0)
    }

    pub fn at_scale(mut self, r: f64) -> Self {
        self.scale = Some(r);
        self
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.config.insert(key.to_string(), v);
        self
    }

    pub fn noted(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub entries: Vec<CheckEntry>,
}

impl VerifierReport {
    pub fn push(&mut self, e: CheckEntry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, es: impl IntoIterator<Item = CheckEntry>) {
        self.entries.extend(es);
    }

    /// True iff no decided check failed.
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.verdict != Verdict::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| e.verdict == Verdict::Fail)
    }
}

/// Thresholds of the lower-bound and oscillation-decay checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowdownConstants {
    /// Mass threshold `c₀` of the positivity lemma.
    pub c0: f64,
    /// Bound on the logarithm of `Φ`.
    pub m0: f64,
    /// Lower-bound level; oscillation must shrink by `1 - δ/4` per halving.
    pub delta: f64,
}

impl Default for BlowdownConstants {
    fn default() -> Self {
        Self {
            c0: 0.1,
            m0: 10.0,
            delta: 0.4,
        }
    }
}

impl BlowdownConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::OutOfDomain { what: "c0", value: self.c0 });
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::OutOfDomain {
                what: "delta (must lie in (0, 1))",
                value: self.delta,
            });
        }
        if !(self.m0 > 0.0) {
            return Err(Error::OutOfDomain { what: "m0", value: self.m0 });
        }
        Ok(())
    }
}

fn smoothstep(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s), 6.0 - 12.0 * s)
    }
}

/// Space-time cutoff: `φ = χ⁴` of the distance to `(0, z0)`, equal to 1 on
/// `B(σ_in R)` and supported in `B(σ_out R)`; `η` rises from 0 at
/// `t0 - σ_out² R²` to 1 at `t0 - σ_in² R²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffPair {
    pub center_z: f64,
    pub t0: f64,
    pub radius: f64,
    pub sigma_in: f64,
    pub sigma_out: f64,
}

/// Grid maxima of `|η'|`, `|∇φ/√φ|` and `|∇(∇φ/√φ)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffBounds {
    pub eta_prime: f64,
    pub grad_sqrt: f64,
    pub hess_sqrt: f64,
}

impl CutoffPair {
    pub fn new(center_z: f64, t0: f64, radius: f64, sigma_in: f64, sigma_out: f64) -> Result<Self> {
        if !(radius > 0.0 && 0.0 < sigma_in && sigma_in < sigma_out && sigma_out <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "cutoff needs R > 0 and 0 < σ_in < σ_out <= 1, got R = {radius}, σ = ({sigma_in}, {sigma_out})"
            )));
        }
        Ok(Self {
            center_z,
            t0,
            radius,
            sigma_in,
            sigma_out,
        })
    }

    fn width(&self) -> f64 {
        (self.sigma_out - self.sigma_in) * self.radius
    }

    fn s_of(&self, rho: f64) -> f64 {
        (self.sigma_out * self.radius - rho) / self.width()
    }

    pub fn phi_at(&self, rho: f64) -> f64 {
        smoothstep(self.s_of(rho)).0.powi(4)
    }

    pub fn phi(&self, grid: &Grid, r: f64, z: f64) -> f64 {
        let dz = grid.z_offset(z, self.center_z);
        self.phi_at((r * r + dz * dz).sqrt())
    }

    pub fn eta(&self, t: f64) -> f64 {
        let r2 = self.radius * self.radius;
        let lo = self.t0 - self.sigma_out.powi(2) * r2;
        let span = (self.sigma_out.powi(2) - self.sigma_in.powi(2)) * r2;
        smoothstep((t - lo) / span).0
    }

    pub fn support(&self) -> Ball {
        Ball::axial(self.center_z, self.sigma_out * self.radius)
    }

    pub fn phi_field(&self, grid: Grid) -> Result<ScalarField> {
        self.support().validate(&grid)?;
        let c = *self;
        Ok(ScalarField::from_fn(grid, Parity::Even, move |r, z| c.phi(&grid, r, z)))
    }

    /// `ζ² = φ / ∫φ`, so that `∫ζ² dx = 1` in the discrete measure.
    pub fn zeta_sq_field(&self, grid: Grid) -> Result<ScalarField> {
        let phi = self.phi_field(grid)?;
        let mass: f64 = (0..grid.nr())
            .map(|i| grid.cell_volume(i) * phi.row(i as isize).iter().sum::<f64>())
            .sum();
        if mass <= 0.0 {
            return Err(Error::Undefined("cutoff support holds no cells".into()));
        }
        Ok(phi.scaled(1.0 / mass))
    }

    pub fn derivative_bounds(&self, grid: &Grid) -> CutoffBounds {
        let w = self.width();
        let mut b = CutoffBounds {
            eta_prime: 0.0,
            grad_sqrt: 0.0,
            hess_sqrt: 0.0,
        };
        for i in 0..grid.nr() {
            let r = grid.r(i as isize);
            for j in 0..grid.nz() {
                let dz = grid.z_offset(grid.z(j), self.center_z);
                let rho = (r * r + dz * dz).sqrt();
                let (c, c1, c2) = smoothstep(self.s_of(rho));
                // ∇φ/√φ = G(ρ) ρ̂ with G = -4χχ'/w.
                let g = -4.0 * c * c1 / w;
                let g1 = 4.0 * (c1 * c1 + c * c2) / (w * w);
                b.grad_sqrt = b.grad_sqrt.max(g.abs());
                b.hess_sqrt = b.hess_sqrt.max(g1.abs()).max((g / rho).abs());
            }
        }
        let r2 = self.radius * self.radius;
        let span = (self.sigma_out.powi(2) - self.sigma_in.powi(2)) * r2;
        let n = 1024;
        for k in 0..=n {
            b.eta_prime = b.eta_prime.max(smoothstep(k as f64 / n as f64).1 / span);
        }
        b
    }
}

fn snapshot_count(traj: &Trajectory<ScalarField>, cyl: &ParabolicCylinder) -> Result<usize> {
    Ok(traj.window(cyl.t_from(), cyl.t0)?.len())
}

/// Errors unless a time integral over `cyl` sees at least [`MIN_SNAPSHOTS`] snapshots.
pub fn ensure_sampled(traj: &Trajectory<ScalarField>, cyl: &ParabolicCylinder) -> Result<()> {
    traj.covers(cyl.t_from(), cyl.t0)?;
    if traj.is_steady() {
        return Ok(());
    }
    let n = snapshot_count(traj, cyl)?;
    if n < MIN_SNAPSHOTS {
        return Err(Error::InvalidInput(format!(
            "cylinder of radius {} holds {n} snapshots, at least {MIN_SNAPSHOTS} required",
            cyl.radius
        )));
    }
    Ok(())
}

/// `∬_{cyl} g(f) dx dt` by hat-function quadrature in time.
pub fn cylinder_integral(
    traj: &Trajectory<ScalarField>,
    cyl: &ParabolicCylinder,
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    let ball = cyl.ball();
    ball.validate(traj.snapshots()[0].grid())?;
    let w = traj.time_weights(cyl.t_from(), cyl.t0)?;
    Ok(w.into_iter().map(|(k, wt)| wt * traj.snapshots()[k].ball_sum(&ball, &g)).sum())
}

/// Same as [`cylinder_integral`] over `(B_R \ B_ρ) × (t0 - R², t0]`.
pub fn hollow_cylinder_integral(
    traj: &Trajectory<ScalarField>,
    cyl: &ParabolicCylinder,
    inner: f64,
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    let outer = cyl.ball();
    let hole = Ball::axial(cyl.center_z, inner);
    outer.validate(traj.snapshots()[0].grid())?;
    let w = traj.time_weights(cyl.t_from(), cyl.t0)?;
    Ok(w
        .into_iter()
        .map(|(k, wt)| {
            let f = &traj.snapshots()[k];
            wt * (f.ball_sum(&outer, &g) - f.ball_sum(&hole, &g))
        })
        .sum())
}

/// `(inf, sup)` over the cells and snapshots in `cyl`.
pub fn cylinder_range(traj: &Trajectory<ScalarField>, cyl: &ParabolicCylinder) -> Result<(f64, f64)> {
    let ball = cyl.ball();
    let g = traj.snapshots()[0].grid();
    ball.validate(g)?;
    let cells = ball.cells(g);
    let idx = traj.window(cyl.t_from(), cyl.t0)?;
    if cells.is_empty() || idx.is_empty() {
        return Err(Error::Undefined(format!("cylinder of radius {} holds no samples", cyl.radius)));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in idx {
        let f = &traj.snapshots()[k];
        for &(i, j, _) in &cells {
            lo = lo.min(f.get(i, j));
            hi = hi.max(f.get(i, j));
        }
    }
    Ok((lo, hi))
}

fn sup_abs_in(traj: &Trajectory<ScalarField>, cyl: &ParabolicCylinder) -> Result<f64> {
    let (lo, hi) = cylinder_range(traj, cyl)?;
    Ok(lo.abs().max(hi.abs()))
}

/// `sup_{P(R/2)} |Γ| / (R^{-5} ∬_{P(R)} |Γ|^p)^{1/p}`; zero when `Γ` vanishes.
pub fn mean_value_ratio(traj: &Trajectory<ScalarField>, anchor: Anchor, radius: f64, p: f64) -> Result<f64> {
    if p != 2.0 && p != 3.0 {
        return Err(Error::InvalidInput(format!("mean-value exponent must be 2 or 3, got {p}")));
    }
    let cyl = anchor.cylinder(radius)?;
    ensure_sampled(traj, &cyl)?;
    let integral = cylinder_integral(traj, &cyl, |v| v.abs().powf(p))?;
    let num = sup_abs_in(traj, &cyl.shrunk(0.5))?;
    if integral == 0.0 {
        return Ok(0.0);
    }
    Ok(num / (integral / radius.powi(5)).powf(1.0 / p))
}

/// Exact rational exponent `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exponent {
    pub num: u64,
    pub den: u64,
}

impl Exponent {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn times_ten_ninths(self) -> Self {
        let (n, d) = (self.num * 10, self.den * 9);
        let g = gcd(n, d);
        Self { num: n / g, den: d / g }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoserRung {
    pub exponent: Exponent,
    pub radius: f64,
    /// `‖Γ‖_{L^p(P(R_j))}`.
    pub norm: f64,
    /// `R_j^{-5/p} ‖Γ‖_{L^p(P(R_j))}`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoserLadder {
    pub rungs: Vec<MoserRung>,
    /// `max_{k <= j} normalized_k / normalized_0`.
    pub running_constant: Vec<f64>,
    pub nonincreasing: bool,
    /// `sup_{P(R/2)} |Γ|`, the limit the ladder approaches from below.
    pub sup_half: f64,
}

pub const MAX_MOSER_RUNGS: usize = 6;

/// Exponents `p_j = 3 (10/9)^j` on radii `R_j = (R/2)(1 + 3^{-j})`, `j = 0..=rungs`.
pub fn moser_iterate(traj: &Trajectory<ScalarField>, anchor: Anchor, radius: f64, rungs: usize) -> Result<MoserLadder> {
    if rungs > MAX_MOSER_RUNGS {
        return Err(Error::InvalidInput(format!(
            "at most {MAX_MOSER_RUNGS} Moser rungs are supported, got {rungs}"
        )));
    }
    let mut p = Exponent { num: 3, den: 1 };
    let mut out = Vec::new();
    for j in 0..=rungs {
        let rj = 0.5 * radius * (1.0 + 3f64.powi(-(j as i32)));
        let cyl = anchor.cylinder(rj)?;
        ensure_sampled(traj, &cyl)?;
        let pv = p.value();
        let norm = cylinder_integral(traj, &cyl, |v| v.abs().powf(pv))?.powf(1.0 / pv);
        out.push(MoserRung {
            exponent: p,
            radius: rj,
            norm,
            normalized: rj.powf(-5.0 / pv) * norm,
        });
        p = p.times_ten_ninths();
    }
    let n0 = out[0].normalized;
    let mut run = 0.0f64;
    let running_constant = out
        .iter()
        .map(|r| {
            run = run.max(if n0 > 0.0 { r.normalized / n0 } else { 0.0 });
            run
        })
        .collect();
    let nonincreasing = out.windows(2).all(|w| w[1].normalized <= w[0].normalized);
    let sup_half = sup_abs_in(traj, &anchor.cylinder(0.5 * radius)?)?;
    Ok(MoserLadder {
        rungs: out,
        running_constant,
        nonincreasing,
        sup_half,
    })
}

/// `(|ln ∫f dμ - ∫ln f dμ|, M ‖ln f - ∫ln f dμ‖_{L²(μ)} / ∫f dμ)`.
pub fn nash_gap(f: &[f64], mu: &[f64], m: f64) -> Result<(f64, f64)> {
    if f.len() != mu.len() || f.is_empty() {
        return Err(Error::InvalidInput("samples and weights must be nonempty and of equal length".into()));
    }
    let total: f64 = mu.iter().sum();
    if (total - 1.0).abs() > 1e-12 || mu.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidInput(format!("weights must be a probability vector, sum = {total}")));
    }
    if let Some(&bad) = f.iter().find(|&&v| !(v > 0.0 && v <= m)) {
        return Err(Error::OutOfDomain {
            what: "sample (must lie in (0, M])",
            value: bad,
        });
    }
    // Shifted by the first sample so constant data gives exactly (0, 0).
    let (f0, l0) = (f[0], f[0].ln());
    let rel_mean: f64 = f.iter().zip(mu).map(|(v, w)| w * (v / f0 - 1.0)).sum();
    let rel_log: f64 = f.iter().zip(mu).map(|(v, w)| w * (v.ln() - l0)).sum();
    let g2: f64 = f.iter().zip(mu).map(|(v, w)| w * (v.ln() - l0 - rel_log).powi(2)).sum();
    let mean = f0 * (1.0 + rel_mean);
    Ok(((rel_mean.ln_1p() - rel_log).abs(), m * g2.sqrt() / mean))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashSuite {
    pub samples: usize,
    /// `max (lhs - rhs)` over the samples.
    pub max_excess: f64,
    pub max_lhs: f64,
}

/// Randomized `nash_gap` trials with sample counts, magnitudes and weights drawn
/// from a seeded generator.
pub fn nash_random_suite(seed: u64, samples: usize, m: f64) -> Result<NashSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_lhs = 0.0f64;
    for _ in 0..samples {
        let n = rng.random_range(1..=64);
        // Log-uniform magnitudes reach deep toward zero.
        let depth: f64 = rng.random_range(0.0..12.0);
        let f: Vec<f64> = (0..n)
            .map(|_| m * (-depth * rng.random::<f64>()).exp())
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        let mut mu: Vec<f64> = raw.iter().map(|w| w / s).collect();
        let drift: f64 = 1.0 - mu.iter().sum::<f64>();
        mu[0] += drift;
        let (l, r) = nash_gap(&f, &mu, m)?;
        max_excess = max_excess.max(l - r);
        max_lhs = max_lhs.max(l);
    }
    Ok(NashSuite {
        samples,
        max_excess,
        max_lhs,
    })
}

/// `∫|Ψ - Ψ̄|²ζ² / ∫|∇Ψ|²ζ²` with `Ψ̄ = ∫Ψζ²`; zero for constant `Ψ`.
pub fn weighted_poincare_ratio(psi: &ScalarField, zeta: &CutoffPair) -> Result<f64> {
    let g = *psi.grid();
    let z2 = zeta.zeta_sq_field(g)?;
    let f = psi.axis_fill();
    let mut mean = 0.0;
    for i in 0..g.nr() {
        let w = g.cell_volume(i);
        for j in 0..g.nz() {
            mean += w * z2.get(i, j) * f.get(i, j);
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..g.nr() {
        let ii = i as isize;
        let w = g.cell_volume(i);
        for j in 0..g.nz() {
            let jj = j as isize;
            let zz = z2.get(i, j);
            if zz == 0.0 {
                continue;
            }
            let dr = if i + 1 == g.nr() {
                (f.at(ii, jj) - f.at(ii - 1, jj)) / g.dr()
            } else {
                (f.at(ii + 1, jj) - f.at(ii - 1, jj)) / (2.0 * g.dr())
            };
            let dz = (f.get(i, g.wrap_j(jj + 1)) - f.get(i, g.wrap_j(jj - 1))) / (2.0 * g.dz());
            num += w * zz * (f.get(i, j) - mean).powi(2);
            den += w * zz * (dr * dr + dz * dz);
        }
    }
    if num == 0.0 || den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Residual of `∂_tΨ + b·∇Ψ + (2/r)∂_rΨ - ΔΨ + |∇Ψ|²` for `Ψ = -ln Φ` at the last
/// snapshot, by centered differences and a backward time difference.
///
/// The wall row needs data beyond the domain and is left at zero.
pub fn log_transform_residual(
    traj: &Trajectory<ScalarField>,
    drift: &DriftDecomposition,
    floor: f64,
) -> Result<ScalarField> {
    log_transform_residual_in(traj, drift, floor, None)
}

/// [`log_transform_residual`] restricted to the cells of `region` and their
/// neighbours; `Φ` must clear `floor` only there. Other cells are left at zero.
pub fn log_transform_residual_in(
    traj: &Trajectory<ScalarField>,
    drift: &DriftDecomposition,
    floor: f64,
    region: Option<&Ball>,
) -> Result<ScalarField> {
    let g = *traj.last().grid();
    g.ensure_same(drift.grid())?;
    let mut mask = vec![region.is_none(); g.cells()];
    if let Some(b) = region {
        b.validate(&g)?;
        for (i, j, _) in b.cells(&g) {
            mask[i * g.nz() + j] = true;
        }
    }
    // Cells read by the stencil of a masked cell.
    let mut needed = mask.clone();
    for i in 0..g.nr() {
        for j in 0..g.nz() {
            if mask[i * g.nz() + j] {
                for (di, dj) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
                    let ii = i as isize + di;
                    if ii >= 0 && (ii as usize) < g.nr() {
                        needed[ii as usize * g.nz() + g.wrap_j(j as isize + dj)] = true;
                    }
                }
            }
        }
    }
    let to_psi = |phi: &ScalarField| -> Result<ScalarField> {
        let low = phi
            .interior()
            .iter()
            .zip(&needed)
            .find(|(v, n)| **n && !(**v >= floor));
        if let Some((&m, _)) = low {
            return Err(Error::OutOfDomain {
                what: "Φ below the positivity floor",
                value: m,
            });
        }
        Ok(phi.map(|v| if v > 0.0 { -v.ln() } else { 0.0 }).axis_fill())
    };
    let psi = to_psi(traj.last())?;
    let prev = if traj.is_steady() || traj.len() < 2 {
        None
    } else {
        let k = traj.len() - 2;
        Some((to_psi(&traj.snapshots()[k])?, traj.last_time() - traj.times()[k]))
    };
    let b = drift.total();
    let mut res = ScalarField::zeros(g, Parity::Even);
    for i in 0..g.nr().saturating_sub(1) {
        let ii = i as isize;
        let r = g.r(ii);
        for j in 0..g.nz() {
            if !mask[i * g.nz() + j] {
                continue;
            }
            let jj = j as isize;
            let (c, e, w) = (psi.at(ii, jj), psi.at(ii + 1, jj), psi.at(ii - 1, jj));
            let (n, s) = (psi.get(i, g.wrap_j(jj + 1)), psi.get(i, g.wrap_j(jj - 1)));
            let pr = (e - w) / (2.0 * g.dr());
            let pz = (n - s) / (2.0 * g.dz());
            let lap = (e - 2.0 * c + w) / (g.dr() * g.dr()) + pr / r + (n - 2.0 * c + s) / (g.dz() * g.dz());
            let pt = prev.as_ref().map_or(0.0, |(p, h)| (c - p.get(i, j)) / h);
            let adv = b.vr.get(i, j) * pr + b.vz.get(i, j) * pz;
            res.set(i, j, pt + adv + 2.0 * pr / r - lap + pr * pr + pz * pz);
        }
    }
    Ok(res)
}

fn check_phi_range(traj: &Trajectory<ScalarField>, cyl: &ParabolicCylinder, hi: f64) -> Result<()> {
    let (lo, up) = cylinder_range(traj, cyl)?;
    if lo < -1e-12 || up > hi + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "Φ must lie in [0, {hi}] on the cylinder, found [{lo}, {up}]"
        )));
    }
    Ok(())
}

/// Positivity lemma: if `∬_{P(R/2)} Φ >= c₀ R⁵` then `inf_{P(R/8)} Φ >= δ/2`.
pub fn lower_bound_check(
    traj: &Trajectory<ScalarField>,
    consts: &BlowdownConstants,
    anchor: Anchor,
    radius: f64,
) -> Result<CheckEntry> {
    consts.validate()?;
    let cyl = anchor.cylinder(radius)?;
    check_phi_range(traj, &cyl, 2.0)?;
    let half = cyl.shrunk(0.5);
    ensure_sampled(traj, &half)?;
    let mass = cylinder_integral(traj, &half, |v| v.abs())?;
    let need = consts.c0 * radius.powi(5);
    let name = "lower_bound";
    if mass < need {
        return Ok(CheckEntry::hypothesis_failed(name, mass, need)
            .at_scale(radius)
            .with("c0", consts.c0)
            .with("delta", consts.delta));
    }
    let (inf, _) = cylinder_range(traj, &cyl.shrunk(0.125))?;
    Ok(CheckEntry::compare(name, 0.5 * consts.delta, inf, 0.0)
        .at_scale(radius)
        .with("c0", consts.c0)
        .with("delta", consts.delta)
        .with("mass", mass))
}

/// `Φ(0, z)` by even quadratic extrapolation from the first two rows.
pub fn axis_trace(f: &ScalarField) -> Vec<f64> {
    (0..f.grid().nz())
        .map(|j| f.get(0, j) - (f.get(1, j) - f.get(0, j)) / 8.0)
        .collect()
}

/// Relative tolerance on the axis trace of `Φ`.
pub const AXIS_TRACE_TOL: f64 = 1e-2;

/// `R^{-5/p} ‖Φ‖_{L^p((B_R \ B_{R/2}) × (t0 - R², t0])`; positivity is the verdict.
pub fn lp_lower_bound_check(
    traj: &Trajectory<ScalarField>,
    anchor: Anchor,
    radius: f64,
    p: f64,
    axis_value: f64,
) -> Result<CheckEntry> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfDomain {
            what: "exponent p (must lie in (0, 1))",
            value: p,
        });
    }
    if !(axis_value > 1.0) {
        return Err(Error::OutOfDomain {
            what: "axis value (must exceed 1)",
            value: axis_value,
        });
    }
    let cyl = anchor.cylinder(radius)?;
    ensure_sampled(traj, &cyl)?;
    for k in traj.window(cyl.t_from(), cyl.t0)? {
        for v in axis_trace(&traj.snapshots()[k]) {
            if (v - axis_value).abs() > AXIS_TRACE_TOL * axis_value {
                return Err(Error::InvalidInput(format!(
                    "axis trace {v} differs from the axis value {axis_value}"
                )));
            }
        }
    }
    let integral = hollow_cylinder_integral(traj, &cyl, 0.5 * radius, |v| v.abs().powf(p))?;
    let value = radius.powf(-5.0 / p) * integral.powf(1.0 / p);
    let mut e = CheckEntry::compare("lp_lower_bound", 0.0, value, 0.0)
        .at_scale(radius)
        .with("p", p)
        .with("axis_value", axis_value);
    if value <= 0.0 {
        e.pass = Some(false);
        e.verdict = Verdict::Fail;
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiBranch {
    /// `Φ = 2(M₁ - Γ)/J₁`.
    FromMax,
    /// `Φ = 2(Γ - m₁)/J₁`.
    FromMin,
}

#[derive(Debug, Clone)]
pub struct PhiNormalization {
    pub phi: Trajectory<ScalarField>,
    pub branch: PhiBranch,
    /// Value of `Φ` where `Γ = 0`, i.e. on the axis.
    pub axis_value: f64,
}

/// Normalizes `Γ` to `Φ ∈ [0, 2]` on the largest cylinder of `profile`.
pub fn normalize_phi(traj: &Trajectory<ScalarField>, profile: &OscillationProfile) -> Result<PhiNormalization> {
    let top = profile
        .entries
        .first()
        .ok_or_else(|| Error::InvalidInput("empty oscillation profile".into()))?;
    let (m1, big_m1, j1) = (top.m, top.big_m, top.j);
    if j1 <= 0.0 {
        return Err(Error::Undefined("zero oscillation on the largest cylinder".into()));
    }
    let (branch, phi, axis_value) = if big_m1 > -m1 {
        (
            PhiBranch::FromMax,
            traj.map(|f| f.map(|v| 2.0 * (big_m1 - v) / j1)),
            2.0 * big_m1 / j1,
        )
    } else {
        (
            PhiBranch::FromMin,
            traj.map(|f| f.map(|v| 2.0 * (v - m1) / j1)),
            -2.0 * m1 / j1,
        )
    };
    Ok(PhiNormalization {
        phi,
        branch,
        axis_value,
    })
}

/// Ratios `J_{R/2}/J_R`, each passing iff `<= 1 - δ/4`, plus the maximum and the
/// range of the normalized `Φ` on the largest cylinder.
pub fn oscillation_decay_check(
    traj: &Trajectory<ScalarField>,
    scales: &DyadicScaleSet,
    anchor: Anchor,
    delta: f64,
) -> Result<Vec<CheckEntry>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfDomain {
            what: "delta (must lie in (0, 1))",
            value: delta,
        });
    }
    let profile = oscillation_profile(traj, scales, anchor)?;
    let bound = 1.0 - 0.25 * delta;
    if profile.entries.iter().all(|e| e.j == 0.0) {
        return Ok(vec![CheckEntry::vacuous("oscillation_decay").with("delta", delta)]);
    }
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    for w in profile.entries.windows(2) {
        let name = "oscillation_decay";
        if w[0].j == 0.0 {
            out.push(CheckEntry::vacuous(name).at_scale(w[0].radius).with("delta", delta));
            continue;
        }
        let ratio = w[1].j / w[0].j;
        worst = worst.max(ratio);
        out.push(
            CheckEntry::compare(name, ratio, bound, 0.0)
                .at_scale(w[0].radius)
                .with("delta", delta),
        );
    }
    out.push(CheckEntry::compare("oscillation_decay_max", worst, bound, 0.0).with("delta", delta));
    let phi = normalize_phi(traj, &profile)?;
    let (lo, hi) = cylinder_range(&phi.phi, &anchor.cylinder(scales.r0)?)?;
    let mut range = CheckEntry::compare("phi_normalization", hi, 2.0, 1e-12)
        .at_scale(scales.r0)
        .with("phi_min", lo)
        .with("axis_value", phi.axis_value);
    if lo < -1e-12 {
        range.pass = Some(false);
        range.verdict = Verdict::Fail;
    }
    out.push(range);
    Ok(out)
}

/// Drifts with `‖b‖_E <= 10` at the default diagnostic scales, used to probe
/// the estimates beyond the drift-free case.
pub fn admissible_drift_suite() -> Vec<(&'static str, DriftSpec)> {
    vec![
        ("zero", DriftSpec::default()),
        (
            "scaled_inverse_r",
            DriftSpec {
                b3: B3Spec::ScaledInverseR { c: 1.0 },
                ..Default::default()
            },
        ),
        (
            "stream_rsin",
            DriftSpec {
                b2: B2Spec::RSin { amplitude: 1.0, mode: 1 },
                ..Default::default()
            },
        ),
        (
            "stream_gaussian",
            DriftSpec {
                b2: B2Spec::Gaussian {
                    amplitude: 2.0,
                    width: 0.2,
                },
                ..Default::default()
            },
        ),
        (
            "shell",
            DriftSpec {
                b1: B1Spec::Shell {
                    amplitude: 1.0,
                    r_in: 0.1,
                    r_out: 0.4,
                },
                ..Default::default()
            },
        ),
        (
            "composite",
            DriftSpec {
                b1: B1Spec::Shell {
                    amplitude: 0.5,
                    r_in: 0.1,
                    r_out: 0.4,
                },
                b2: B2Spec::RSin { amplitude: 0.5, mode: 1 },
                b3: B3Spec::ScaledInverseR { c: 0.5 },
            },
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(64, 64, 1.0, 1.0).unwrap()
    }

    #[test]
    fn check_entries_follow_the_pass_rule() {
        let e = CheckEntry::compare("a", 1.0, 1.0, 0.0);
        assert_eq!(e.pass, Some(true));
        assert_eq!(e.ratio, Some(1.0));
        assert_eq!(CheckEntry::compare("a", 1.05, 1.0, 0.1).verdict, Verdict::Pass);
        assert_eq!(CheckEntry::compare("a", 1.2, 1.0, 0.1).verdict, Verdict::Fail);
        let mut rep = VerifierReport::default();
        rep.push(CheckEntry::vacuous("v"));
        rep.push(CheckEntry::hypothesis_failed("h", 0.0, 1.0));
        assert!(rep.all_pass());
        rep.push(CheckEntry::compare("f", 2.0, 1.0, 0.0));
        assert!(!rep.all_pass());
        assert_eq!(rep.failures().count(), 1);
    }

    #[test]
    fn blowdown_constants_validate() {
        assert!(BlowdownConstants::default().validate().is_ok());
        for delta in [0.0, 1.0, -0.1] {
            let c = BlowdownConstants {
                delta,
                ..Default::default()
            };
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn cutoff_has_declared_plateau_support_and_finite_bounds() {
        let c = CutoffPair::new(0.5, 0.0, 0.4, 0.5, 1.0).unwrap();
        assert_eq!(c.phi_at(0.1), 1.0);
        assert_eq!(c.phi_at(0.2), 1.0);
        assert_eq!(c.phi_at(0.4), 0.0);
        assert!(c.phi_at(0.3) > 0.0 && c.phi_at(0.3) < 1.0);
        assert_eq!(c.eta(0.0), 1.0);
        assert_eq!(c.eta(-0.039), 1.0);
        assert_eq!(c.eta(-0.17), 0.0);
        let b = c.derivative_bounds(&grid());
        assert!(b.eta_prime.is_finite() && b.grad_sqrt.is_finite() && b.hess_sqrt.is_finite());
        // max χ' = 3/2 over a time span of 0.75 R².
        assert!((b.eta_prime - 1.5 / (0.75 * 0.16)).abs() < 1e-9);
        let z2 = c.zeta_sq_field(grid()).unwrap();
        let total: f64 = (0..64).map(|i| grid().cell_volume(i) * z2.row(i as isize).iter().sum::<f64>()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(CutoffPair::new(0.5, 0.0, 0.4, 1.0, 0.5).is_err());
    }

    #[test]
    fn mean_value_ratio_of_zero_and_homogeneity() {
        let g = grid();
        let zero = Trajectory::steady(ScalarField::zeros(g, Parity::Even));
        let a = Anchor { z0: 0.5, t0: 0.0 };
        assert_eq!(mean_value_ratio(&zero, a, 0.4, 3.0).unwrap(), 0.0);
        let f = ScalarField::from_fn(g, Parity::Even, |r, z| r * r * (1.0 + 0.3 * (2.0 * PI * z).sin()));
        let r1 = mean_value_ratio(&Trajectory::steady(f.clone()), a, 0.4, 3.0).unwrap();
        let r2 = mean_value_ratio(&Trajectory::steady(f.scaled(7.5)), a, 0.4, 3.0).unwrap();
        assert!((r1 - r2).abs() <= 1e-12 * r1);
        assert!(mean_value_ratio(&zero, a, 0.4, 4.0).is_err());
    }

    #[test]
    fn sparse_cadence_is_rejected() {
        let g = grid();
        let f = ScalarField::constant(g, Parity::Even, 1.0);
        let traj = Trajectory::new(vec![0.0, 0.1, 0.2], vec![f.clone(), f.clone(), f]).unwrap();
        let a = Anchor { z0: 0.5, t0: 0.2 };
        assert!(mean_value_ratio(&traj, a, 0.4, 2.0).is_err());
    }

    #[test]
    fn moser_exponents_are_exact() {
        let mut p = Exponent { num: 3, den: 1 };
        for j in 0..=6u32 {
            assert_eq!(p.num * 9u64.pow(j), 3 * 10u64.pow(j) * p.den);
            p = p.times_ten_ninths();
        }
        let g = grid();
        let zero = Trajectory::steady(ScalarField::zeros(g, Parity::Even));
        let l = moser_iterate(&zero, Anchor { z0: 0.5, t0: 0.0 }, 0.4, 6).unwrap();
        assert_eq!(l.rungs.len(), 7);
        assert!(l.rungs.iter().all(|r| r.norm == 0.0));
        assert!(moser_iterate(&zero, Anchor { z0: 0.5, t0: 0.0 }, 0.4, 7).is_err());
    }

    #[test]
    fn nash_gap_trivial_and_two_valued_cases() {
        assert_eq!(nash_gap(&[1.3, 1.3], &[0.5, 0.5], 2.0).unwrap(), (0.0, 0.0));
        let (l, r) = nash_gap(&[0.5, 1.5], &[0.5, 0.5], 2.0).unwrap();
        // ln 1 - ½ ln 0.75 against 2 (½ ln 3) / 1.
        assert!((l + 0.5 * 0.75f64.ln()).abs() < 1e-15);
        assert!((r - 3f64.ln()).abs() < 1e-15);
        assert!(l <= r);
        assert!(nash_gap(&[0.0, 1.0], &[0.5, 0.5], 2.0).is_err());
        assert!(nash_gap(&[1.0, 1.0], &[0.5, 0.6], 2.0).is_err());
    }

    #[test]
    fn nash_suite_is_seeded() {
        let a = nash_random_suite(7, 50, 2.0).unwrap();
        let b = nash_random_suite(7, 50, 2.0).unwrap();
        assert_eq!(a, b);
        assert!(a.max_excess <= 1e-12);
    }

    #[test]
    fn poincare_ratio_of_constant_is_zero() {
        let g = grid();
        let c = CutoffPair::new(0.5, 0.0, 0.4, 0.5, 1.0).unwrap();
        let f = ScalarField::constant(g, Parity::Even, 2.0);
        assert_eq!(weighted_poincare_ratio(&f, &c).unwrap(), 0.0);
    }

    #[test]
    fn log_transform_of_gaussian_has_analytic_defect() {
        let g = grid();
        let phi = ScalarField::from_fn(g, Parity::Even, |r, _| (-r * r).exp());
        let res = log_transform_residual(&Trajectory::steady(phi), &DriftDecomposition::zero(g), 1e-6).unwrap();
        for i in 0..g.nr() - 1 {
            let r = g.r(i as isize);
            for j in 0..g.nz() {
                assert!((res.get(i, j) - 4.0 * r * r).abs() < 1e-9, "{i} {j}");
            }
        }
        let c = ScalarField::constant(g, Parity::Even, 0.7);
        let res = log_transform_residual(&Trajectory::steady(c), &DriftDecomposition::zero(g), 1e-6).unwrap();
        assert_eq!(res.sup_abs(), 0.0);
        let low = ScalarField::constant(g, Parity::Even, 1e-9);
        assert!(log_transform_residual(&Trajectory::steady(low), &DriftDecomposition::zero(g), 1e-6).is_err());
    }

    #[test]
    fn lower_bound_check_for_unit_phi_and_mass_gate() {
        let g = grid();
        let a = Anchor { z0: 0.5, t0: 0.0 };
        let one = Trajectory::steady(ScalarField::constant(g, Parity::Even, 1.0));
        let e = lower_bound_check(&one, &BlowdownConstants::default(), a, 0.4).unwrap();
        assert_eq!(e.verdict, Verdict::Pass);
        assert_eq!(e.rhs, 1.0);
        // Mass of P(R/2) is (4π/3)(R/2)⁵.
        let mass = e.config["mass"];
        assert!((mass / (4.0 * PI / 3.0 * 0.2f64.powi(5)) - 1.0).abs() < 0.05, "{mass}");
        let dip = Trajectory::steady(ScalarField::from_fn(g, Parity::Even, |r, z| {
            let d2 = r * r + (z - 0.5).powi(2);
            if d2 < 0.3 * 0.3 {
                1e-3
            } else {
                1.0
            }
        }));
        let e = lower_bound_check(&dip, &BlowdownConstants::default(), a, 0.4).unwrap();
        assert_eq!(e.verdict, Verdict::HypothesisFailed);
        assert_eq!(e.pass, None);
    }

    #[test]
    fn lp_lower_bound_of_constant_matches_volume() {
        let g = Grid::new(128, 128, 1.0, 1.0).unwrap();
        let a = Anchor { z0: 0.5, t0: 0.0 };
        let two = Trajectory::steady(ScalarField::constant(g, Parity::Even, 2.0));
        let r: f64 = 0.4;
        for p in [0.5, 0.9] {
            let e = lp_lower_bound_check(&two, a, r, p, 2.0).unwrap();
            let vol = 4.0 * PI / 3.0 * (r.powi(3) - (0.5 * r).powi(3)) * r * r;
            let oracle = r.powf(-5.0 / p) * (2f64.powf(p) * vol).powf(1.0 / p);
            assert!((e.rhs / oracle - 1.0).abs() < 0.03, "{p}: {} {oracle}", e.rhs);
            assert_eq!(e.verdict, Verdict::Pass);
        }
        assert!(lp_lower_bound_check(&two, a, r, 1.5, 2.0).is_err());
        assert!(lp_lower_bound_check(&two, a, r, 0.5, 3.0).is_err());
    }

    #[test]
    fn oscillation_decay_of_zero_is_vacuous_and_r2_passes() {
        let g = Grid::new(128, 128, 1.0, 1.0).unwrap();
        let scales = DyadicScaleSet::new(0.25, 3).unwrap();
        let a = Anchor { z0: 0.5, t0: 0.0 };
        let zero = Trajectory::steady(ScalarField::zeros(g, Parity::Even));
        let e = oscillation_decay_check(&zero, &scales, a, 0.4).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].verdict, Verdict::Vacuous);
        let r2 = Trajectory::steady(ScalarField::from_fn(g, Parity::Even, |r, _| r * r));
        let e = oscillation_decay_check(&r2, &scales, a, 0.4).unwrap();
        assert!(e.iter().all(|x| x.verdict == Verdict::Pass), "{e:?}");
        let phi = normalize_phi(&r2, &oscillation_profile(&r2, &scales, a).unwrap()).unwrap();
        assert_eq!(phi.branch, PhiBranch::FromMax);
        assert!(phi.axis_value > 1.9);
    }

    #[test]
    fn suite_drifts_build() {
        let g = grid();
        for (_, spec) in admissible_drift_suite() {
            spec.build(g, 0.5).unwrap();
        }
    }
}
