//! Axisymmetric elliptic solves: Fourier in the periodic direction, a direct
//! radial solve per mode, then iterative refinement against the physical-space
//! operator.

use std::sync::Arc;

use nalgebra::{DMatrix, Dyn, LU};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Parity, ScalarField};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonSolveConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for PoissonSolveConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: 8,
        }
    }
}

impl PoissonSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) || self.max_iter == 0 {
            return Err(Error::InvalidInput(format!(
                "poisson tolerance must lie in (0, 1) and iterations be >= 1, got {} / {}",
                self.rel_tol, self.max_iter
            )));
        }
        Ok(())
    }
}

/// Discrete operator being inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// Five-point `∂_r² + (1/r)∂_r + ∂_z²` in flux form, zero flux at the wall.
    Compact,
    /// `D G` where `D` is the conservative divergence and `G = -D*` in the
    /// `r`-weighted inner product; its range is exactly the range of `D`.
    Projection,
    /// `Δ - 1/r²` on odd fields with homogeneous Dirichlet data at the wall.
    VectorDirichlet,
}

impl Stencil {
    /// Symbol of the axial part for mode `k`.
    fn axial_eigenvalue(self, k: usize, nz: usize, dz: f64) -> f64 {
        let th = 2.0 * std::f64::consts::PI * k as f64 / nz as f64;
        match self {
            Stencil::Compact | Stencil::VectorDirichlet => -(2.0 - 2.0 * th.cos()) / (dz * dz),
            Stencil::Projection => -(th.sin() / dz).powi(2),
        }
    }

    fn is_singular(self, k: usize, nz: usize) -> bool {
        match self {
            Stencil::Compact => k == 0,
            Stencil::Projection => k == 0 || 2 * k == nz,
            Stencil::VectorDirichlet => false,
        }
    }

    /// Radial part applied to one column `x` (length `nr`).
    fn apply_radial(self, g: &Grid, x: &[f64], out: &mut [f64]) {
        let nr = g.nr();
        let dr = g.dr();
        match self {
            Stencil::Compact | Stencil::VectorDirichlet => {
                for i in 0..nr {
                    let rc = g.r(i as isize);
                    let east = if i + 1 < nr {
                        g.r_face(i as isize) * (x[i + 1] - x[i])
                    } else if self == Stencil::VectorDirichlet {
                        g.r_face(i as isize) * (-2.0 * x[i])
                    } else {
                        0.0
                    };
                    let west = if i > 0 {
                        g.r_face(i as isize - 1) * (x[i] - x[i - 1])
                    } else {
                        0.0
                    };
                    let mut v = (east - west) / (rc * dr * dr);
                    if self == Stencil::VectorDirichlet {
                        v -= x[i] / (rc * rc);
                    }
                    out[i] = v;
                }
            }
            Stencil::Projection => {
                let mut gr = vec![0.0; nr];
                grad_r(g, x, &mut gr);
                div_r(g, &gr, out);
            }
        }
    }

    /// Axial part along one row `x` (length `nz`), accumulated into `out`.
    fn add_axial(self, dz: f64, x: &[f64], out: &mut [f64]) {
        let nz = x.len();
        match self {
            Stencil::Compact | Stencil::VectorDirichlet => {
                let c = 1.0 / (dz * dz);
                for j in 0..nz {
                    out[j] += c * (x[(j + 1) % nz] - 2.0 * x[j] + x[(j + nz - 1) % nz]);
                }
            }
            Stencil::Projection => {
                let c = 1.0 / (4.0 * dz * dz);
                for j in 0..nz {
                    out[j] += c * (x[(j + 2) % nz] - 2.0 * x[j] + x[(j + nz - 2) % nz]);
                }
            }
        }
    }
}

/// Radial part of `G = -D*` on one column; the wall face carries no flux.
pub(crate) fn grad_r(g: &Grid, p: &[f64], out: &mut [f64]) {
    let nr = g.nr();
    for k in 0..nr {
        let mut s = 0.0;
        if k + 1 < nr {
            s += g.r_face(k as isize) * (p[k + 1] - p[k]);
        }
        if k > 0 {
            s += g.r_face(k as isize - 1) * (p[k] - p[k - 1]);
        }
        out[k] = s / (2.0 * g.r(k as isize) * g.dr());
    }
}

/// Radial part of the conservative divergence with zero flux at axis and wall.
pub(crate) fn div_r(g: &Grid, v: &[f64], out: &mut [f64]) {
    let nr = g.nr();
    for i in 0..nr {
        let fp = if i + 1 < nr {
            g.r_face(i as isize) * 0.5 * (v[i] + v[i + 1])
        } else {
            0.0
        };
        let fm = if i > 0 {
            g.r_face(i as isize - 1) * 0.5 * (v[i - 1] + v[i])
        } else {
            0.0
        };
        out[i] = (fp - fm) / (g.r(i as isize) * g.dr());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Factorized solver for one grid and stencil.
pub struct SpectralPoisson {
    grid: Grid,
    stencil: Stencil,
    lus: Vec<LU<f64, Dyn, Dyn>>,
    weights: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralPoisson {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPoisson")
            .field("grid", &self.grid)
            .field("stencil", &self.stencil)
            .finish()
    }
}

impl SpectralPoisson {
    pub fn new(grid: Grid, stencil: Stencil) -> Self {
        let nr = grid.nr();
        let nz = grid.nz();
        let mut radial = DMatrix::<f64>::zeros(nr, nr);
        let mut e = vec![0.0; nr];
        let mut col = vec![0.0; nr];
        for c in 0..nr {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            stencil.apply_radial(&grid, &e, &mut col);
            for (r, v) in col.iter().enumerate() {
                radial[(r, c)] = *v;
            }
        }
        let lus = (0..=nz / 2)
            .map(|k| {
                let mut a = radial.clone();
                let lam = stencil.axial_eigenvalue(k, nz, grid.dz());
                for i in 0..nr {
                    a[(i, i)] += lam;
                }
                if stencil.is_singular(k, nz) {
                    for c in 0..nr {
                        a[(0, c)] = if c == 0 { 1.0 } else { 0.0 };
                    }
                }
                a.lu()
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            grid,
            stencil,
            lus,
            weights: (0..nr).map(|i| grid.r(i as isize)).collect(),
            fwd: planner.plan_fft_forward(nz),
            inv: planner.plan_fft_inverse(nz),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Physical-space operator on interior values (row-major `nr x nz`).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (nr, nz) = (self.grid.nr(), self.grid.nz());
        let mut out = vec![0.0; nr * nz];
        let mut col = vec![0.0; nr];
        let mut res = vec![0.0; nr];
        for j in 0..nz {
            for i in 0..nr {
                col[i] = x[i * nz + j];
            }
            self.stencil.apply_radial(&self.grid, &col, &mut res);
            for i in 0..nr {
                out[i * nz + j] = res[i];
            }
        }
        for i in 0..nr {
            self.stencil
                .add_axial(self.grid.dz(), &x[i * nz..(i + 1) * nz], &mut out[i * nz..(i + 1) * nz]);
        }
        out
    }

    /// Removes the part of `b` outside the operator's range.
    pub fn make_compatible(&self, b: &mut [f64]) {
        let (nr, nz) = (self.grid.nr(), self.grid.nz());
        let wsum: f64 = self.weights.iter().sum::<f64>() * nz as f64;
        let modes: &[(usize, bool)] = match self.stencil {
            Stencil::Compact => &[(0, false)],
            Stencil::Projection if nz % 2 == 0 => &[(0, false), (1, true)],
            Stencil::Projection => &[(0, false)],
            Stencil::VectorDirichlet => &[],
        };
        for &(_, alternating) in modes {
            let sign = |j: usize| if alternating && j % 2 == 1 { -1.0 } else { 1.0 };
            let mut m = 0.0;
            for i in 0..nr {
                for j in 0..nz {
                    m += self.weights[i] * sign(j) * b[i * nz + j];
                }
            }
            m /= wsum;
            for i in 0..nr {
                for j in 0..nz {
                    b[i * nz + j] -= m * sign(j);
                }
            }
        }
    }

    fn solve_once(&self, b: &[f64]) -> Vec<f64> {
        let (nr, nz) = (self.grid.nr(), self.grid.nz());
        let mut spec = vec![Complex::new(0.0, 0.0); nr * nz];
        for i in 0..nr {
            let row = &mut spec[i * nz..(i + 1) * nz];
            for (s, v) in row.iter_mut().zip(&b[i * nz..(i + 1) * nz]) {
                *s = Complex::new(*v, 0.0);
            }
            self.fwd.process(row);
        }
        let mut rhs = DMatrix::<f64>::zeros(nr, 2);
        for k in 0..=nz / 2 {
            for i in 0..nr {
                let c = spec[i * nz + k];
                rhs[(i, 0)] = c.re;
                rhs[(i, 1)] = c.im;
            }
            if self.stencil.is_singular(k, nz) {
                for col in 0..2 {
                    let m: f64 = (0..nr).map(|i| self.weights[i] * rhs[(i, col)]).sum::<f64>()
                        / self.weights.iter().sum::<f64>();
                    for i in 0..nr {
                        rhs[(i, col)] -= m;
                    }
                    rhs[(0, col)] = 0.0;
                }
            }
            self.lus[k].solve_mut(&mut rhs);
            if self.stencil.is_singular(k, nz) {
                for col in 0..2 {
                    let m: f64 = (0..nr).map(|i| self.weights[i] * rhs[(i, col)]).sum::<f64>()
                        / self.weights.iter().sum::<f64>();
                    for i in 0..nr {
                        rhs[(i, col)] -= m;
                    }
                }
            }
            for i in 0..nr {
                let c = Complex::new(rhs[(i, 0)], rhs[(i, 1)]);
                spec[i * nz + k] = c;
                if k != 0 && 2 * k != nz {
                    spec[i * nz + nz - k] = c.conj();
                }
            }
        }
        let scale = 1.0 / nz as f64;
        let mut out = vec![0.0; nr * nz];
        for i in 0..nr {
            let row = &mut spec[i * nz..(i + 1) * nz];
            self.inv.process(row);
            for (o, s) in out[i * nz..(i + 1) * nz].iter_mut().zip(row.iter()) {
                *o = s.re * scale;
            }
        }
        out
    }

    /// Solves `A x = b` after projecting `b` onto the range of `A`.
    ///
    /// The returned solution has zero `r`-weighted mean in every null mode.
    pub fn solve(&self, b: &[f64], cfg: &PoissonSolveConfig) -> Result<(Vec<f64>, PoissonStats)> {
        cfg.validate()?;
        let n = self.grid.cells();
        if b.len() != n {
            return Err(Error::InvalidInput(format!("rhs has {} values, expected {n}", b.len())));
        }
        let mut rhs = b.to_vec();
        self.make_compatible(&mut rhs);
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let bnorm = norm(&rhs);
        if bnorm == 0.0 {
            return Ok((
                vec![0.0; n],
                PoissonStats {
                    iterations: 0,
                    residual: 0.0,
                },
            ));
        }
        let mut x = vec![0.0; n];
        let mut r = rhs.clone();
        for it in 1..=cfg.max_iter {
            let dx = self.solve_once(&r);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            let ax = self.apply(&x);
            r.iter_mut()
                .zip(rhs.iter().zip(&ax))
                .for_each(|(ri, (bi, ai))| *ri = bi - ai);
            self.make_compatible(&mut r);
            let rel = norm(&r) / bnorm;
            if rel <= cfg.rel_tol {
                return Ok((
                    x,
                    PoissonStats {
                        iterations: it,
                        residual: rel,
                    },
                ));
            }
            if it == cfg.max_iter {
                return Err(Error::NonConvergence {
                    iterations: it,
                    residual: rel,
                });
            }
        }
        unreachable!("max_iter >= 1 is validated")
    }
}

/// Solves `Δp = rhs` with zero-flux wall, even parity at the axis and zero mean.
pub fn pressure_poisson(rhs: &ScalarField, cfg: &PoissonSolveConfig) -> Result<(ScalarField, PoissonStats)> {
    let g = *rhs.grid();
    let solver = SpectralPoisson::new(g, Stencil::Compact);
    let (x, stats) = solver.solve(rhs.interior(), cfg)?;
    let mut p = ScalarField::from_interior(g, Parity::Even, &x)?;
    p.copy_outer_ghost();
    Ok((p, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = grid(16);
        let (p, st) = pressure_poisson(&ScalarField::zeros(g, Parity::Even), &PoissonSolveConfig::default()).unwrap();
        assert_eq!(p.sup_abs(), 0.0);
        assert_eq!(st.iterations, 0);
    }

    #[test]
    fn recovers_axial_cosine() {
        let g = grid(32);
        let k = 2.0 * PI;
        // Discrete symbol of the axial second difference.
        let lam = -(2.0 - 2.0 * (k * g.dz()).cos()) / (g.dz() * g.dz());
        let rhs = ScalarField::from_fn(g, Parity::Even, |_, z| lam * (k * z).cos());
        let (p, _) = pressure_poisson(&rhs, &PoissonSolveConfig::default()).unwrap();
        let exact = ScalarField::from_fn(g, Parity::Even, |_, z| (k * z).cos());
        assert!(p.max_abs_diff(&exact).unwrap() < 1e-10);
    }

    #[test]
    fn recovers_neumann_compatible_quartic() {
        // p* = r² - r⁴/2 has zero slope at r = 1 and Δp* = 4 - 8r².
        let mut errs = Vec::new();
        for n in [16usize, 32] {
            let g = grid(n);
            let rhs = ScalarField::from_fn(g, Parity::Even, |r, _| 4.0 - 8.0 * r * r);
            let (p, _) = pressure_poisson(&rhs, &PoissonSolveConfig::default()).unwrap();
            let raw = ScalarField::from_fn(g, Parity::Even, |r, _| r * r - 0.5 * r.powi(4));
            let w: f64 = (0..n).map(|i| g.r(i as isize)).sum();
            let mean: f64 = (0..n).map(|i| g.r(i as isize) * raw.get(i, 0)).sum::<f64>() / w;
            errs.push(p.max_abs_diff(&raw.map(|v| v - mean)).unwrap());
        }
        assert!(errs[0] < 5e-3, "{errs:?}");
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
    }

    #[test]
    fn projection_stencil_solves_range_of_divergence() {
        let g = grid(16);
        let s = SpectralPoisson::new(g, Stencil::Projection);
        let x0: Vec<f64> = (0..g.cells()).map(|k| ((k * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        let b = s.apply(&x0);
        let (x, st) = s.solve(&b, &PoissonSolveConfig::default()).unwrap();
        let bx = s.apply(&x);
        let err = bx.iter().zip(&b).fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
        assert!(err < 1e-9 * b.iter().fold(0.0f64, |m, v| m.max(v.abs())), "{err} {st:?}");
    }

    #[test]
    fn vector_dirichlet_is_exact_on_linear_profile_interior() {
        let g = grid(16);
        let s = SpectralPoisson::new(g, Stencil::VectorDirichlet);
        let x: Vec<f64> = (0..g.cells()).map(|k| g.r((k / g.nz()) as isize)).collect();
        let ax = s.apply(&x);
        for i in 0..g.nr() - 1 {
            assert!(ax[i * g.nz()].abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let g = grid(8);
        let rhs = ScalarField::zeros(g, Parity::Even);
        let bad = PoissonSolveConfig {
            rel_tol: 2.0,
            max_iter: 1,
        };
        assert!(pressure_poisson(&rhs, &bad).is_err());
    }
}
