//! Gridded scalar and cylindrical vector fields with axis parity ghosts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Ball, Grid};

/// Symmetry of a field under the reflection `r -> -r` through the axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Scalar values on the cell centers plus one ghost row at each radial end.
///
/// Storage is row-major over `(nr + 2) x nz`; row `0` of the buffer is the
/// axis ghost, so `at(i, j)` reads buffer row `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    parity: Parity,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid, parity: Parity) -> Self {
        Self {
            grid,
            parity,
            data: vec![0.0; (grid.nr() + 2) * grid.nz()],
        }
    }

    /// Samples `f(r, z)` at cell centers and at the outer ghost row; the axis
    /// ghost is then filled from parity.
    pub fn from_fn(grid: Grid, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid, parity);
        let nz = grid.nz();
        for i in 0..=grid.nr() {
            let r = grid.r(i as isize);
            let row = &mut out.data[(i + 1) * nz..(i + 2) * nz];
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(r, grid.z(j));
            }
        }
        out.fill_axis_ghost();
        out
    }

    pub fn constant(grid: Grid, parity: Parity, c: f64) -> Self {
        Self::from_fn(grid, parity, |_, _| c)
    }

    /// Builds a field from interior values in row-major order; the outer ghost
    /// copies the last interior row.
    pub fn from_interior(grid: Grid, parity: Parity, values: &[f64]) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                grid.cells(),
                values.len()
            )));
        }
        let nz = grid.nz();
        let mut out = Self::zeros(grid, parity);
        out.data[nz..(grid.nr() + 1) * nz].copy_from_slice(values);
        out.copy_outer_ghost();
        out.fill_axis_ghost();
        Ok(out)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn expect_parity(&self, expected: Parity) -> Result<()> {
        if self.parity == expected {
            Ok(())
        } else {
            Err(Error::ParityMismatch {
                expected,
                found: self.parity,
            })
        }
    }

    #[inline]
    fn offset(&self, i: isize, j: usize) -> usize {
        debug_assert!(i >= -1 && i <= self.grid.nr() as isize);
        (i + 1) as usize * self.grid.nz() + j
    }

    /// Interior value.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i + 1) * self.grid.nz() + j]
    }

    /// Value at row `i` in `-1..=nr` and any axial index, wrapped periodically.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.data[self.offset(i, self.grid.wrap_j(j))]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let nz = self.grid.nz();
        self.data[(i + 1) * nz + j] = v;
    }

    #[inline]
    pub fn set_at(&mut self, i: isize, j: usize, v: f64) {
        let k = self.offset(i, j);
        self.data[k] = v;
    }

    /// Row `i` in `-1..=nr`, including ghosts.
    pub fn row(&self, i: isize) -> &[f64] {
        let nz = self.grid.nz();
        let s = (i + 1) as usize * nz;
        &self.data[s..s + nz]
    }

    pub fn row_mut(&mut self, i: isize) -> &mut [f64] {
        let nz = self.grid.nz();
        let s = (i + 1) as usize * nz;
        &mut self.data[s..s + nz]
    }

    /// All interior values, row-major.
    pub fn interior(&self) -> &[f64] {
        let nz = self.grid.nz();
        &self.data[nz..(self.grid.nr() + 1) * nz]
    }

    pub fn interior_mut(&mut self) -> &mut [f64] {
        let nz = self.grid.nz();
        let nr = self.grid.nr();
        &mut self.data[nz..(nr + 1) * nz]
    }

    /// Mutable interior rows for disjoint parallel writes.
    pub fn interior_rows_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        let nz = self.grid.nz();
        self.interior_mut().chunks_exact_mut(nz)
    }

    /// Mirrors row `0` into the axis ghost with the parity sign.
    pub fn fill_axis_ghost(&mut self) {
        let nz = self.grid.nz();
        let s = self.parity.sign();
        let (ghost, rest) = self.data.split_at_mut(nz);
        for (g, v) in ghost.iter_mut().zip(&rest[..nz]) {
            *g = s * v;
        }
    }

    pub fn axis_fill(&self) -> Self {
        let mut out = self.clone();
        out.fill_axis_ghost();
        out
    }

    /// Zero-gradient outer ghost.
    pub fn copy_outer_ghost(&mut self) {
        let nz = self.grid.nz();
        let nr = self.grid.nr();
        let (head, ghost) = self.data.split_at_mut((nr + 1) * nz);
        ghost.copy_from_slice(&head[nr * nz..]);
    }

    pub fn set_outer_ghost(&mut self, f: impl Fn(usize, f64) -> f64) {
        let nr = self.grid.nr() as isize;
        for j in 0..self.grid.nz() {
            let inner = self.at(nr - 1, j as isize);
            self.set_at(nr, j, f(j, inner));
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            parity: self.parity,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise `f(r, z, value)` over interior and outer ghost, parity refreshed.
    pub fn map_with_coords(&self, parity: Parity, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(self.grid, parity);
        for i in 0..=self.grid.nr() as isize {
            let r = self.grid.r(i);
            for j in 0..self.grid.nz() {
                out.set_at(i, j, f(r, self.grid.z(j), self.at(i, j as isize)));
            }
        }
        out.fill_axis_ghost();
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        other.expect_parity(self.parity)?;
        Ok(Self {
            grid: self.grid,
            parity: self.parity,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.interior().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.interior().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs(&self) -> f64 {
        self.interior().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First non-finite interior cell, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        let nz = self.grid.nz();
        self.interior()
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| (k / nz, k % nz))
    }

    pub fn is_finite(&self) -> bool {
        self.first_non_finite().is_none()
    }

    /// Sup-norm distance over interior cells.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .interior()
            .iter()
            .zip(other.interior())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Bilinear interpolation through the four nearest cell centers.
    ///
    /// Outside the hull of the centers the nearest stencil is extrapolated
    /// linearly, so `a + b r + c z + d r z` is reproduced on
    /// `[0, r_max] x [z_0, z_{nz-1}]`.
    pub fn interpolate(&self, r: f64, z: f64) -> Result<f64> {
        let g = &self.grid;
        if !(r >= 0.0 && r <= g.r_max()) || !z.is_finite() {
            return Err(Error::OutOfDomain {
                what: "interpolation radius",
                value: r,
            });
        }
        let s = r / g.dr() - 0.5;
        let i0 = (s.floor() as isize).clamp(0, g.nr() as isize - 2);
        let tr = s - i0 as f64;
        let zw = z.rem_euclid(g.z_len());
        let q = zw / g.dz() - 0.5;
        let j0 = q.floor();
        let tz = q - j0;
        let j0 = j0 as isize;
        let f00 = self.at(i0, j0);
        let f01 = self.at(i0, j0 + 1);
        let f10 = self.at(i0 + 1, j0);
        let f11 = self.at(i0 + 1, j0 + 1);
        let lo = f00 + tz * (f01 - f00);
        let hi = f10 + tz * (f11 - f10);
        Ok(lo + tr * (hi - lo))
    }

    /// `∫_B |f|^p dx` with 3D cylindrical measure.
    pub fn ball_integral(&self, ball: &Ball, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(Error::InvalidInput(format!("exponent p = {p} must be positive")));
        }
        ball.validate(&self.grid)?;
        Ok(self.ball_sum(ball, |v| v.abs().powf(p)))
    }

    /// `Σ w_k g(f_k)` over the cells of `ball`, summed in a fixed order.
    pub fn ball_sum(&self, ball: &Ball, g: impl Fn(f64) -> f64) -> f64 {
        ball.cells(&self.grid)
            .into_iter()
            .map(|(i, j, w)| w * g(self.get(i, j)))
            .sum()
    }

    /// Average over `ball` with respect to the discrete measure.
    pub fn ball_mean(&self, ball: &Ball) -> Result<f64> {
        ball.validate(&self.grid)?;
        let cells = ball.cells(&self.grid);
        let vol: f64 = cells.iter().map(|c| c.2).sum();
        if vol <= 0.0 {
            return Err(Error::Undefined("ball contains no cells".into()));
        }
        Ok(cells.iter().map(|&(i, j, w)| w * self.get(i, j)).sum::<f64>() / vol)
    }
}

/// Cylindrical components `(v^r, v^θ, v^z)` with parities (odd, odd, even).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldCyl {
    pub vr: ScalarField,
    pub vtheta: ScalarField,
    pub vz: ScalarField,
}

impl VectorFieldCyl {
    pub const PARITIES: [Parity; 3] = [Parity::Odd, Parity::Odd, Parity::Even];

    pub fn new(vr: ScalarField, vtheta: ScalarField, vz: ScalarField) -> Result<Self> {
        vr.grid().ensure_same(vtheta.grid())?;
        vr.grid().ensure_same(vz.grid())?;
        vr.expect_parity(Parity::Odd)?;
        vtheta.expect_parity(Parity::Odd)?;
        vz.expect_parity(Parity::Even)?;
        Ok(Self { vr, vtheta, vz })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            vr: ScalarField::zeros(grid, Parity::Odd),
            vtheta: ScalarField::zeros(grid, Parity::Odd),
            vz: ScalarField::zeros(grid, Parity::Even),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        Self {
            vr: ScalarField::from_fn(grid, Parity::Odd, |r, z| f(r, z)[0]),
            vtheta: ScalarField::from_fn(grid, Parity::Odd, |r, z| f(r, z)[1]),
            vz: ScalarField::from_fn(grid, Parity::Even, |r, z| f(r, z)[2]),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.vr.grid()
    }

    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.vr, &self.vtheta, &self.vz]
    }

    pub fn fill_axis_ghosts(&mut self) {
        self.vr.fill_axis_ghost();
        self.vtheta.fill_axis_ghost();
        self.vz.fill_axis_ghost();
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            vr: self.vr.add(&other.vr)?,
            vtheta: self.vtheta.add(&other.vtheta)?,
            vz: self.vz.add(&other.vz)?,
        })
    }

    /// Pointwise Euclidean magnitude squared over interior cells, row-major.
    pub fn magnitude_sq(&self) -> Vec<f64> {
        self.vr
            .interior()
            .iter()
            .zip(self.vtheta.interior())
            .zip(self.vz.interior())
            .map(|((a, b), c)| a * a + b * b + c * c)
            .collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude_sq().into_iter().fold(0.0, f64::max).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self
            .vr
            .max_abs_diff(&other.vr)?
            .max(self.vtheta.max_abs_diff(&other.vtheta)?)
            .max(self.vz.max_abs_diff(&other.vz)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn axis_ghost_follows_parity() {
        let g = grid(8);
        let odd = ScalarField::from_fn(g, Parity::Odd, |r, _| 3.0 * r + 1.0);
        let even = ScalarField::from_fn(g, Parity::Even, |r, _| 3.0 * r + 1.0);
        let a = odd.get(0, 2);
        assert_eq!(odd.at(-1, 2), -a);
        assert_eq!(even.at(-1, 2), a);
    }

    #[test]
    fn axis_fill_is_idempotent_and_keeps_interior() {
        let g = grid(16);
        let mut f = ScalarField::from_fn(g, Parity::Odd, |r, z| r * (2.0 * PI * z).sin());
        f.set_at(-1, 3, 99.0);
        let once = f.axis_fill();
        let twice = once.axis_fill();
        assert_eq!(once, twice);
        assert_eq!(once.interior(), f.interior());
    }

    #[test]
    fn even_r2_vanishes_on_axis_to_second_order() {
        for n in [16, 32, 64] {
            let g = grid(n);
            let f = ScalarField::from_fn(g, Parity::Even, |r, _| r * r);
            let v = f.interpolate(0.0, 0.3).unwrap();
            assert!(v.abs() <= g.dr() * g.dr(), "{v}");
        }
    }

    #[test]
    fn interpolate_constant_and_linear() {
        let g = grid(64);
        let c = ScalarField::constant(g, Parity::Even, 2.5);
        assert!((c.interpolate(0.31, 0.77).unwrap() - 2.5).abs() < 1e-14);
        let lin = ScalarField::from_fn(g, Parity::Even, |r, _| r);
        assert!((lin.interpolate(0.5, 0.2).unwrap() - 0.5).abs() <= g.dr() * g.dr());
        let rz = ScalarField::from_fn(g, Parity::Even, |r, z| r * z);
        let (r, z) = (g.r(10), g.z(20));
        assert_eq!(rz.interpolate(r, z).unwrap(), rz.get(10, 20));
    }

    #[test]
    fn interpolate_rejects_outside_radius() {
        let g = grid(8);
        let f = ScalarField::zeros(g, Parity::Even);
        assert!(f.interpolate(-0.1, 0.0).is_err());
        assert!(f.interpolate(1.5, 0.0).is_err());
    }

    #[test]
    fn ball_volume_and_r6_moment() {
        let g = grid(64);
        let one = ScalarField::constant(g, Parity::Even, 1.0);
        let r2 = ScalarField::from_fn(g, Parity::Even, |r, _| r * r);
        let rad = 0.45;
        let ball = Ball::axial(0.5, rad);
        let vol = one.ball_integral(&ball, 1.0).unwrap();
        assert!((vol / (4.0 / 3.0 * PI * rad.powi(3)) - 1.0).abs() < 0.02);
        let m = r2.ball_integral(&ball, 3.0).unwrap();
        let exact = 64.0 * PI / 315.0 * rad.powi(9);
        assert!((m / exact - 1.0).abs() < 0.02, "{}", m / exact);
        assert_eq!(ScalarField::zeros(g, Parity::Even).ball_integral(&ball, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn ball_integral_rejects_oversized_radius() {
        let g = grid(16);
        let f = ScalarField::constant(g, Parity::Even, 1.0);
        assert!(f.ball_integral(&Ball::axial(0.5, 0.6), 1.0).is_err());
        assert!(f.ball_integral(&Ball::axial(0.5, 0.2), 0.0).is_err());
    }

    #[test]
    fn vector_parities_enforced() {
        let g = grid(8);
        let even = ScalarField::zeros(g, Parity::Even);
        let odd = ScalarField::zeros(g, Parity::Odd);
        assert!(VectorFieldCyl::new(even.clone(), odd.clone(), even.clone()).is_err());
        assert!(VectorFieldCyl::new(odd.clone(), odd.clone(), even).is_ok());
    }

    #[test]
    fn from_interior_round_trip() {
        let g = grid(8);
        let f = ScalarField::from_fn(g, Parity::Odd, |r, z| r + z);
        let h = ScalarField::from_interior(g, Parity::Odd, f.interior()).unwrap();
        assert_eq!(h.interior(), f.interior());
        assert_eq!(h.at(-1, 0), f.at(-1, 0));
        assert!(ScalarField::from_interior(g, Parity::Odd, &[0.0; 3]).is_err());
    }
}
