//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use axilab::run::{cmd_run, DiagnosticsReport};
use axilab::verify::cmd_verify;
use axilab::{presets, RunConfig};
use axilab_core::drift::{divergence, make_b2_from_stream, make_b3_scaled, B1Spec, B3Spec, DriftDecomposition, DriftSpec};
use axilab_core::gamma::{DtPolicy, GammaRunConfig, GammaSolver, GammaState, SpaceTimeFn, WallCondition};
use axilab_core::liouville::{harmonic_mean_value_check, rescale, swirl_residual, BlowupCandidate};
use axilab_core::norms::{
    bmo_seminorm, hollow_energy, hollowed_scaled_energy, holder_fit, john_nirenberg_ratio,
    oscillation_profile, sup_r_abs, Anchor, BmoFamily, DyadicScaleSet,
};
use axilab_core::ns::{NSState, NsRunConfig, NsSolver};
use axilab_core::poisson::PoissonSolveConfig;
use axilab_core::verify::{admissible_drift_suite, mean_value_ratio, nash_gap, nash_random_suite};
use axilab_core::{Ball, Grid, Parity, ScalarField, Trajectory, VectorFieldCyl};

type Outcome = Result<(bool, String), String>;

/// Preset runs shared by several criteria.
struct Fixture {
    _tmp: tempfile::TempDir,
    runs: Vec<(String, RunConfig, DiagnosticsReport)>,
    suite_verifier: serde_json::Value,
}

impl Fixture {
    fn build() -> Result<Self, String> {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut runs = Vec::new();
        let mut suite_verifier = serde_json::Value::Null;
        for name in presets::names() {
            let cfg = RunConfig::parse(presets::get(name).unwrap()).map_err(|e| e.to_string())?;
            let out = tmp.path().join(name);
            let outcome = cmd_run(&cfg, &out, true).map_err(|e| format!("{name}: {e}"))?;
            if name == "verify_suite_full" {
                cmd_verify(&out, true).map_err(|e| e.to_string())?;
                suite_verifier = read_json(&out.join("verifier.json"))?;
            }
            runs.push((name.to_string(), cfg, outcome.report));
        }
        Ok(Self {
            _tmp: tmp,
            runs,
            suite_verifier,
        })
    }

    fn suite(&self) -> &DiagnosticsReport {
        &self.runs.iter().find(|r| r.0 == "verify_suite_full").unwrap().2
    }
}

fn read_json(p: &Path) -> Result<serde_json::Value, String> {
    let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn c01_manufactured_steadiness() -> Outcome {
    let g = Grid::new(64, 64, 1.0, 1.0).map_err(err)?;
    let init = ScalarField::from_fn(g, Parity::Even, |r, _| r * r);
    let run = GammaSolver::new(&DriftDecomposition::zero(g), WallCondition::Frozen)
        .run(
            &GammaState::new(init.clone(), 0.0).map_err(err)?,
            &GammaRunConfig {
                dt: DtPolicy::default(),
                t_end: 0.1,
                cadence: 0.005,
            },
        )
        .map_err(err)?;
    let mut worst = 0.0f64;
    for s in run.trajectory.snapshots() {
        worst = worst.max(s.max_abs_diff(&init).map_err(err)?);
    }
    Ok((worst <= 1e-4, format!("sup |Γ(t) - r²| over T = 0.1 = {worst:.2e} (<= 1e-4)")))
}

fn c02_maximum_principle(fx: &Fixture) -> Outcome {
    let mut worst = 0.0f64;
    let mut cells = 0.0f64;
    let mut count = 0;
    for (_, _, rep) in &fx.runs {
        for d in &rep.runs {
            let r = &d.gamma_range;
            worst = worst.max(r.max_principle_excess);
            cells = cells.max(r.sup - r.initial_sup).max(r.initial_inf - r.inf);
            count += 1;
        }
    }
    Ok((
        worst <= 1e-8,
        format!(
            "{count} runs over {} presets, largest excursion beyond initial, axis and wall data = {worst:.2e} (<= 1e-8); beyond initial cells alone = {cells:.2e}",
            fx.runs.len()
        ),
    ))
}

fn ns_cfg(t_end: f64, cadence: f64) -> NsRunConfig {
    NsRunConfig {
        dt: DtPolicy::Cfl { safety: 0.5 },
        t_end,
        cadence,
        poisson: PoissonSolveConfig::default(),
    }
}

fn meridional_state(g: Grid, swirl: f64) -> Result<VectorFieldCyl, String> {
    let stream = ScalarField::from_fn(g, Parity::Odd, |r, z| {
        let w = (1.0 - r * r).max(0.0);
        0.5 * r * w * w * (2.0 * PI * z).sin()
    });
    let mut v = make_b2_from_stream(&stream).map_err(err)?;
    v.vtheta = ScalarField::from_fn(g, Parity::Odd, |r, z| {
        swirl * r * (-4.0 * r * r).exp() * (1.0 + 0.3 * (2.0 * PI * z).cos())
    });
    Ok(v)
}

fn c03_ns_steady_state() -> Outcome {
    let g = Grid::new(64, 64, 1.0, 1.0).map_err(err)?;
    let omega = 1.0;
    let v0 = VectorFieldCyl::from_fn(g, |r, _| [0.0, omega * r, 0.0]);
    let run = NsSolver::new(g, omega * g.r_max())
        .run(&NSState::new(v0.clone(), 0.0).map_err(err)?, &ns_cfg(0.1, 0.025))
        .map_err(err)?;
    let mut dv = 0.0f64;
    for s in run.trajectory.snapshots() {
        dv = dv.max(s.max_abs_diff(&v0).map_err(err)?);
    }
    // Pressure against Ω²r²/2 up to a constant, compared through the two-cell
    // radial gradient since a collocated pressure carries an odd-even mode.
    let p = &run.pressure;
    let mut dp = 0.0f64;
    for i in 1..g.nr() - 1 {
        let ii = i as isize;
        for j in 0..g.nz() {
            let jj = j as isize;
            let grad = (p.at(ii + 1, jj) - p.at(ii - 1, jj)) / (2.0 * g.dr());
            dp = dp.max((grad - omega * omega * g.r(ii)).abs());
        }
    }
    let free = NsSolver::new(g, 0.0)
        .run(&NSState::new(meridional_state(g, 0.0)?, 0.0).map_err(err)?, &ns_cfg(0.02, 0.01))
        .map_err(err)?;
    let swirl = free
        .trajectory
        .snapshots()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.vtheta.sup_abs()));
    Ok((
        dv <= 1e-4 && swirl == 0.0,
        format!(
            "rigid rotation sup |v(t) - v(0)| = {dv:.2e} (<= 1e-4), |∂_r p - Ω²r| = {dp:.2e}; swirl-free run sup |v^θ| = {swirl:e} (== 0)"
        ),
    ))
}

fn mms_error(n: usize, exact: &SpaceTimeFn, forcing: &SpaceTimeFn, t_end: f64) -> Result<f64, String> {
    let g = Grid::new(n, n, 1.0, 1.0).map_err(err)?;
    let solver = GammaSolver::new(&DriftDecomposition::zero(g), WallCondition::Exact(exact.clone()));
    let e0 = exact.clone();
    let init = ScalarField::from_fn(g, Parity::Even, move |r, z| e0(r, z, 0.0));
    let run = solver
        .run_forced(
            &GammaState::new(init, 0.0).map_err(err)?,
            &GammaRunConfig {
                dt: DtPolicy::Cfl { safety: 0.8 },
                t_end,
                cadence: t_end,
            },
            Some(forcing),
        )
        .map_err(err)?;
    let e1 = exact.clone();
    let target = ScalarField::from_fn(g, Parity::Even, move |r, z| e1(r, z, t_end));
    run.trajectory.last().max_abs_diff(&target).map_err(err)
}

fn c04_mms_order() -> Outcome {
    let k = 2.0 * PI;
    // Γ = r² sin(kz) e^{-t}: the radial part is annihilated, so the forcing is (k² - 1)Γ.
    let axial: SpaceTimeFn = Arc::new(move |r, z, t| r * r * (k * z).sin() * (-t).exp());
    let axial_f: SpaceTimeFn = Arc::new(move |r, z, t| (k * k - 1.0) * r * r * (k * z).sin() * (-t).exp());
    // Γ = r² e^{-r²}(1 + sin(kz)/2) e^{-t}.
    let radial: SpaceTimeFn =
        Arc::new(move |r, z, t| r * r * (-r * r).exp() * (1.0 + 0.5 * (k * z).sin()) * (-t).exp());
    let radial_f: SpaceTimeFn = Arc::new(move |r, z, t| {
        let s = (k * z).sin();
        0.5 * r * r * (-4.0 * r * r * s - 8.0 * r * r + 7.0 * s + 14.0 + 4.0 * PI * PI * s) * (-r * r - t).exp()
    });
    let mut orders = Vec::new();
    for (ex, f) in [(&axial, &axial_f), (&radial, &radial_f)] {
        let e64 = mms_error(64, ex, f, 0.05)?;
        let e128 = mms_error(128, ex, f, 0.05)?;
        orders.push((e64 / e128).log2());
    }
    let ok = orders.iter().all(|o| (1.7..=2.3).contains(o));
    Ok((ok, format!("observed order 64² -> 128²: axial {:.3}, radial {:.3} (in [1.7, 2.3])", orders[0], orders[1])))
}

fn c05_divergence_free() -> Outcome {
    let g = Grid::new(64, 64, 1.0, 1.0).map_err(err)?;
    let mut curl_div = 0.0f64;
    for (_, spec) in admissible_drift_suite() {
        let d = spec.build(g, 0.5).map_err(err)?;
        curl_div = curl_div.max(divergence(d.total()).sup_abs());
    }
    let run = NsSolver::new(g, 0.0)
        .run(&NSState::new(meridional_state(g, 3.0)?, 0.0).map_err(err)?, &ns_cfg(0.02, 0.005))
        .map_err(err)?;
    let proj_div = run.steps.iter().skip(1).fold(0.0f64, |m, s| m.max(s.divergence));
    Ok((
        curl_div <= 1e-12 && proj_div <= 1e-8,
        format!("curl drifts {curl_div:.2e} (<= 1e-12), projected NS states {proj_div:.2e} (<= 1e-8)"),
    ))
}

fn c06_norm_correctness() -> Outcome {
    let g = Grid::new(64, 64, 2.0, 4.0).map_err(err)?;
    let ez = VectorFieldCyl::from_fn(g, |_, _| [0.0, 0.0, 1.0]);
    let oracle = 4.0 * PI / 3.0 * (8.0 - 1.0 / 512.0);
    let hse = hollow_energy(&ez, 2.0, 1.0).map_err(err)?;
    let hse_rel = (hse / oracle - 1.0).abs();
    let mut rb3 = 0.0f64;
    for c in [0.5, 1.0, 3.0] {
        let b3 = make_b3_scaled(Grid::new(64, 64, 1.0, 1.0).map_err(err)?, c).map_err(err)?;
        rb3 = rb3.max((sup_r_abs([&b3]) - c).abs());
    }
    let mut bmo = 0.0f64;
    for c in [-2.0, 0.0, 7.5] {
        bmo = bmo.max(bmo_seminorm(&ScalarField::constant(g, Parity::Even, c)).value);
    }
    Ok((
        hse_rel <= 0.03 && rb3 <= 1e-12 && bmo == 0.0,
        format!(
            "HSE(e_z, R = 1) = {hse:.4} vs {oracle:.4} (rel {hse_rel:.2e} <= 3e-2); |sup r|b3| - c| = {rb3:.1e} (<= 1e-12); BMO(const) = {bmo:e} (== 0)"
        ),
    ))
}

fn c07_scale_invariance() -> Outcome {
    let g = Grid::new(128, 128, 1.0, 1.0).map_err(err)?;
    let z0 = 0.5;
    let spec = |amp: f64, r_in: f64, r_out: f64, c: f64| DriftSpec {
        b1: B1Spec::Shell {
            amplitude: amp,
            r_in,
            r_out,
        },
        b3: B3Spec::ScaledInverseR { c },
        ..Default::default()
    };
    let base = spec(1.0, 0.1, 0.4, 1.5).build(g, z0).map_err(err)?;
    // Exact transform law on the sampled drift.
    let mut rb3_gap = 0.0f64;
    for q in [0.5, 2.0, 4.0] {
        let r = base.rescaled(q).map_err(err)?;
        rb3_gap = rb3_gap.max((sup_r_abs([r.b3()]) - sup_r_abs([base.b3()])).abs());
    }
    // HSE of b_Q = Q b(Q x) resampled on the same mesh, at scales divided by Q.
    let scales = DyadicScaleSet::new(0.25, 3).map_err(err)?;
    let anchor = Anchor { z0, t0: 0.0 };
    let hse = |d: &DriftDecomposition, s: &DyadicScaleSet| {
        hollowed_scaled_energy(&Trajectory::steady(d.b1().clone()), s, anchor).map(|h| h.value)
    };
    let h1 = hse(&base, &scales).map_err(err)?;
    let q = 2.0;
    let scaled = spec(q, 0.1 / q, 0.4 / q, 1.5).build(g, z0).map_err(err)?;
    let h2 = hse(&scaled, &scales.scaled(1.0 / q)).map_err(err)?;
    let hse_rel = (h2 / h1 - 1.0).abs();
    // Γ of the rescaled velocity at mapped points.
    let vt = |r: f64, z: f64| r * (-r * r).exp() * (1.0 + 0.3 * (2.0 * PI * z).cos());
    let v = VectorFieldCyl::from_fn(g, move |r, z| [0.0, vt(r, z), 0.0]);
    let cand = BlowupCandidate::anchor(0.0, z0, 0.0, q).map_err(err)?;
    // 50 cells keep target nodes off the source nodes, so values are interpolated.
    let target = Grid::new(50, 50, 1.0, 1.0).map_err(err)?;
    let rt = rescale(&Trajectory::steady(v), &cand, target, 0.0).map_err(err)?;
    let gq = rt.gamma_field(0);
    let mut gamma_gap = 0.0f64;
    for i in 0..target.nr() {
        for j in 0..target.nz() {
            let (r, z) = (target.r(i as isize) / q, z0 + (target.z(j) - 0.5) / q);
            gamma_gap = gamma_gap.max((gq.get(i, j) - r * vt(r, z)).abs());
        }
    }
    Ok((
        rb3_gap == 0.0 && hse_rel <= 0.03 && gamma_gap <= 1e-3,
        format!(
            "sup r|b3| change {rb3_gap:e} (== 0); HSE {h1:.4} vs {h2:.4} (rel {hse_rel:.2e} <= 3e-2); Γ at mapped points {gamma_gap:.2e} (<= 1e-3)"
        ),
    ))
}

/// `R^{-5} ∬_{P(R)} r^{2p}` for unit radius and height, by Simpson's rule in the polar angle.
fn r_power_moment(p: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |t: f64| t.sin().powf(2.0 * p + 1.0);
    let mut s = f(0.0) + f(PI);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    2.0 * PI * (s * h / 3.0) / (2.0 * p + 3.0)
}

fn c08_mean_value_ratio(fx: &Fixture) -> Outcome {
    let g = Grid::new(256, 256, 1.0, 1.0).map_err(err)?;
    let traj = Trajectory::steady(ScalarField::from_fn(g, Parity::Even, |r, _| r * r));
    let p = 3.0;
    let radius = 0.5;
    let measured = mean_value_ratio(&traj, Anchor { z0: 0.5, t0: 0.0 }, radius, p).map_err(err)?;
    // sup_{B_{R/2}} r² = R²/4 against (R^{-5} R² ∫_{B_R} r^{2p})^{1/p}.
    let oracle = 0.25 / r_power_moment(p).powf(1.0 / p);
    let rel = (measured / oracle - 1.0).abs();
    let suite_max = fx
        .suite_verifier["members"]
        .as_array()
        .into_iter()
        .flatten()
        .flat_map(|m| m["report"]["entries"].as_array().cloned().unwrap_or_default())
        .filter(|e| e["name"] == "mean_value_ratio")
        .filter_map(|e| e["lhs"].as_f64())
        .fold(f64::NAN, f64::max);
    let e_max = fx.suite().runs.iter().fold(0.0f64, |m, d| m.max(d.e_norm));
    Ok((
        rel <= 0.05 && suite_max.is_finite() && e_max <= 10.0,
        format!(
            "Γ = r²: {measured:.4} vs oracle {oracle:.4} (rel {rel:.2e} <= 5e-2); suite max ratio {suite_max:.4} (finite) with max |b|_E = {e_max:.3} (<= 10)"
        ),
    ))
}

fn c09_nash() -> Outcome {
    let suite = nash_random_suite(7, 1000, 2.0).map_err(err)?;
    let mut eq = 0.0f64;
    for (c, n) in [(2.0, 5), (0.3, 17), (1e-6, 40)] {
        let mu = vec![1.0 / n as f64; n];
        let (l, r) = nash_gap(&vec![c; n], &mu, 2.0).map_err(err)?;
        eq = eq.max(l).max(r);
    }
    Ok((
        suite.max_excess <= 1e-12 && eq <= 1e-12,
        format!(
            "1000 samples with M = 2: max (lhs - rhs) = {:.2e} (<= 1e-12); constants give lhs = rhs = {eq:.1e}",
            suite.max_excess
        ),
    ))
}

fn c10_oscillation_decay(fx: &Fixture) -> Outcome {
    let g = Grid::new(256, 256, 1.0, 1.0).map_err(err)?;
    let traj = Trajectory::steady(ScalarField::from_fn(g, Parity::Even, |r, _| r * r));
    let scales = DyadicScaleSet::new(0.25, 3).map_err(err)?;
    let profile = oscillation_profile(&traj, &scales, Anchor { z0: 0.5, t0: 0.0 }).map_err(err)?;
    let ratios: Vec<f64> = profile.entries.windows(2).map(|w| w[1].j / w[0].j).collect();
    let worst = ratios.iter().fold(0.0f64, |m, r| m.max((r / 0.25 - 1.0).abs()));
    let alpha = holder_fit(&profile).map_err(err)?.alpha;
    let suite_max = fx
        .suite()
        .runs
        .iter()
        .flat_map(|d| d.decay_ratios.iter().flatten().copied())
        .fold(0.0f64, f64::max);
    let eta = 1.0 - suite_max;
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    Ok((
        worst <= 0.1 && (alpha - 2.0).abs() <= 0.1 && eta > 0.0,
        format!(
            "Γ = r² ratios [{}] (within 10% of 0.25), α = {alpha:.4} (2 ± 0.1); suite max ratio {suite_max:.4}, η = {eta:.4} (> 0)",
            shown.join(", ")
        ),
    ))
}

fn jn_ratios(n: usize) -> Result<[f64; 2], String> {
    let g = Grid::new(n, n, 1.0, 1.0).map_err(err)?;
    let f = ScalarField::from_fn(g, Parity::Even, |r, z| 0.5 * (r * r + (z - 0.5).powi(2)).ln());
    let fam = BmoFamily::for_grid(&g);
    let ball = Ball::axial(0.5, 0.25);
    Ok([
        john_nirenberg_ratio(&f, 2.0, &ball, &fam).map_err(err)?,
        john_nirenberg_ratio(&f, 6.0, &ball, &fam).map_err(err)?,
    ])
}

fn c11_john_nirenberg() -> Outcome {
    let coarse = jn_ratios(64)?;
    let fine = jn_ratios(128)?;
    let drift: Vec<f64> = coarse.iter().zip(&fine).map(|(a, b)| (b / a - 1.0).abs()).collect();
    let ok = coarse.iter().chain(&fine).all(|x| x.is_finite() && *x > 0.0) && drift.iter().all(|d| *d <= 0.15);
    Ok((
        ok,
        format!(
            "log|x|: p = 2 {:.4} -> {:.4}, p = 6 {:.4} -> {:.4} under 64² -> 128² (changes {:.1}%, {:.1}% <= 15%)",
            coarse[0],
            fine[0],
            coarse[1],
            fine[1],
            100.0 * drift[0],
            100.0 * drift[1]
        ),
    ))
}

fn c12_liouville_identities() -> Outcome {
    let g = Grid::new(64, 64, 1.0, 1.0).map_err(err)?;
    let v = meridional_state(g, 1.0)?;
    let times = vec![0.0, 0.01, 0.02];
    let traj = Trajectory::new(times, vec![v.clone(), v.scaled_for_test(0.9), v.scaled_for_test(0.8)]).map_err(err)?;
    let cand = BlowupCandidate::anchor(0.0, 0.5, 0.02, 1.0).map_err(err)?;
    let rt = rescale(&traj, &cand, g, 0.02).map_err(err)?;
    let mut id_gap = 0.0f64;
    for (a, b) in rt.trajectory.snapshots().iter().zip(traj.snapshots()) {
        id_gap = id_gap.max(a.max_abs_diff(b).map_err(err)?);
    }
    let free = Trajectory::steady(meridional_state(g, 0.0)?);
    let c2 = BlowupCandidate::anchor(0.2, 0.5, 0.0, 2.0).map_err(err)?;
    let swirl = swirl_residual(&rescale(&free, &c2, Grid::new(32, 32, 1.0, 1.0).map_err(err)?, 0.0).map_err(err)?, 1.0).sup_swirl;
    let bz = ScalarField::from_fn(g, Parity::Even, |_, z| z);
    let mv = harmonic_mean_value_check(&bz).map_err(err)?;
    Ok((
        id_gap <= 1e-12 && swirl == 0.0 && mv.max_relative_defect <= 0.02 && !mv.non_harmonic,
        format!(
            "Q = 1 rescale gap {id_gap:.1e} (<= 1e-12); swirl residual {swirl:e} (== 0); B = z mean-value defect {:.2e} (<= 2e-2)",
            mv.max_relative_defect
        ),
    ))
}

fn c13_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let cfg = RunConfig::parse(presets::get("verify_suite_full").unwrap()).map_err(err)?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        cmd_run(&cfg, &out, true).map_err(err)?;
        cmd_verify(&out, true).map_err(err)?;
        let read = |f: &str| fs::read(out.join(f)).map_err(err);
        outputs.push((read("diagnostics.json")?, read("verifier.json")?));
    }
    let same = outputs[0] == outputs[1];
    Ok((
        same,
        format!(
            "seed {}: diagnostics.json {} bytes, verifier.json {} bytes, identical = {same}",
            cfg.seed,
            outputs[0].0.len(),
            outputs[0].1.len()
        ),
    ))
}

trait ScaledForTest {
    fn scaled_for_test(&self, a: f64) -> Self;
}

impl ScaledForTest for VectorFieldCyl {
    fn scaled_for_test(&self, a: f64) -> Self {
        VectorFieldCyl::new(self.vr.scaled(a), self.vtheta.scaled(a), self.vz.scaled(a)).unwrap()
    }
}

fn main() {
    let fixture = Fixture::build();
    let with_fixture = |f: fn(&Fixture) -> Outcome| -> Outcome {
        match &fixture {
            Ok(fx) => f(fx),
            Err(e) => Err(format!("preset runs failed: {e}")),
        }
    };
    let criteria: Vec<(&str, Outcome)> = vec![
        ("manufactured steadiness", c01_manufactured_steadiness()),
        ("discrete maximum principle", with_fixture(c02_maximum_principle)),
        ("NS steady state", c03_ns_steady_state()),
        ("MMS convergence", c04_mms_order()),
        ("divergence-free", c05_divergence_free()),
        ("norm correctness", c06_norm_correctness()),
        ("scale invariance", c07_scale_invariance()),
        ("mean-value ratio", with_fixture(c08_mean_value_ratio)),
        ("Nash inequality", c09_nash()),
        ("oscillation decay", with_fixture(c10_oscillation_decay)),
        ("John-Nirenberg", c11_john_nirenberg()),
        ("Liouville-lab identities", c12_liouville_identities()),
        ("determinism", c13_determinism()),
    ];
    let mut failed = 0;
    for (k, (name, outcome)) in criteria.iter().enumerate() {
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (*ok, d.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {detail}", k + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
