//! Uniform cell-centered (r, z) mesh with a periodic axial direction.
//!
//! Radial cell centers sit at `r_i = (i + 1/2) dr`, so no unknown lives on the
//! axis. One ghost row exists on each radial side: row `-1` mirrors row `0`
//! across `r = 0` and row `nr` lies just outside the wall at `r_max`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nr: usize,
    nz: usize,
    r_max: f64,
    z_len: f64,
    dr: f64,
    dz: f64,
}

impl Grid {
    pub const GHOST_LAYERS: usize = 1;

    pub fn new(nr: usize, nz: usize, r_max: f64, z_len: f64) -> Result<Self> {
        if nr < MIN_CELLS || nz < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "mesh {nr}x{nz} is undersized (need at least {MIN_CELLS} cells per direction)"
            )));
        }
        if !(r_max.is_finite() && r_max > 0.0) || !(z_len.is_finite() && z_len > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got r_max = {r_max}, z_len = {z_len}"
            )));
        }
        Ok(Self {
            nr,
            nz,
            r_max,
            z_len,
            dr: r_max / nr as f64,
            dz: z_len / nz as f64,
        })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn z_len(&self) -> f64 {
        self.z_len
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn cells(&self) -> usize {
        self.nr * self.nz
    }

    /// Radial coordinate of cell row `i`; ghost rows give `-dr/2` and `r_max + dr/2`.
    #[inline]
    pub fn r(&self, i: isize) -> f64 {
        (i as f64 + 0.5) * self.dr
    }

    /// Radius of the face between rows `i` and `i + 1`.
    #[inline]
    pub fn r_face(&self, i: isize) -> f64 {
        (i as f64 + 1.0) * self.dr
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dz
    }

    #[inline]
    pub fn wrap_j(&self, j: isize) -> usize {
        j.rem_euclid(self.nz as isize) as usize
    }

    /// Midpoint of the axial period, the default diagnostic anchor.
    pub fn z_center(&self) -> f64 {
        0.5 * self.z_len
    }

    /// Signed minimal-image axial separation `z - z0`.
    #[inline]
    pub fn z_offset(&self, z: f64, z0: f64) -> f64 {
        let d = (z - z0).rem_euclid(self.z_len);
        if d > 0.5 * self.z_len {
            d - self.z_len
        } else {
            d
        }
    }

    /// 3D volume of the annular cell in row `i`.
    #[inline]
    pub fn cell_volume(&self, i: usize) -> f64 {
        2.0 * PI * self.r(i as isize) * self.dr * self.dz
    }

    /// Same grid with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.nr, self.nz, self.r_max * factor, self.z_len * factor)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// A 3D ball whose center lies in the meridional half-plane at `(center_r, center_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center_r: f64,
    pub center_z: f64,
    pub radius: f64,
}

impl Ball {
    pub fn axial(center_z: f64, radius: f64) -> Self {
        Self {
            center_r: 0.0,
            center_z,
            radius,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::OutOfDomain {
                what: "ball radius",
                value: self.radius,
            });
        }
        let eps = 1e-12 * grid.r_max();
        if self.center_r < 0.0 || self.center_r + self.radius > grid.r_max() + eps {
            return Err(Error::OutOfDomain {
                what: "ball radial extent",
                value: self.center_r + self.radius,
            });
        }
        if self.radius > 0.5 * grid.z_len() + eps {
            return Err(Error::OutOfDomain {
                what: "ball radius (axial period)",
                value: self.radius,
            });
        }
        Ok(())
    }

    /// Cells whose rings meet the ball, with the 3D measure of the intersected arc.
    ///
    /// Membership is decided at the cell center; off-axis balls take the exact
    /// azimuthal fraction of each ring.
    pub fn cells(&self, grid: &Grid) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        let rho = self.radius;
        let a = self.center_r;
        let i_lo = (((a - rho) / grid.dr()).floor().max(0.0)) as usize;
        let i_hi = (((a + rho) / grid.dr()).ceil() as usize).min(grid.nr());
        let jspan = (rho / grid.dz()).ceil() as isize + 1;
        let jc = (self.center_z / grid.dz() - 0.5).round() as isize;
        let nz = grid.nz() as isize;
        let (j_from, j_to) = if 2 * jspan + 1 >= nz {
            (0, nz - 1)
        } else {
            (jc - jspan, jc + jspan)
        };
        for i in i_lo..i_hi {
            let r = grid.r(i as isize);
            let dv = 2.0 * PI * r * grid.dr() * grid.dz();
            for jj in j_from..=j_to {
                let j = grid.wrap_j(jj);
                let dzc = grid.z_offset(grid.z(j), self.center_z);
                let h2 = rho * rho - dzc * dzc;
                if h2 < 0.0 {
                    continue;
                }
                let frac = if a == 0.0 {
                    if r * r <= h2 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let c = (r * r + a * a - h2) / (2.0 * a * r);
                    if c <= -1.0 {
                        1.0
                    } else if c >= 1.0 {
                        0.0
                    } else {
                        c.acos() / PI
                    }
                };
                if frac > 0.0 {
                    out.push((i, j, frac * dv));
                }
            }
        }
        out
    }

    /// Exact 3D volume.
    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.radius.powi(3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings_follow_dimensions() {
        let g = Grid::new(64, 64, 1.0, 1.0).unwrap();
        assert_eq!(g.dr(), 1.0 / 64.0);
        assert_eq!(g.dz(), 1.0 / 64.0);
        let g = Grid::new(8, 8, 2.0, 1.0).unwrap();
        assert_eq!(g.dr(), 0.25);
        assert_eq!(g.dz(), 0.125);
    }

    #[test]
    fn rejects_undersized_and_degenerate() {
        assert!(matches!(Grid::new(4, 64, 1.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(Grid::new(8, 8, 0.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 1.0, -1.0).is_err());
        assert!(Grid::new(8, 8, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn cell_centers_are_half_offset() {
        let g = Grid::new(10, 10, 1.0, 2.0).unwrap();
        assert!((g.r(0) - 0.05).abs() < 1e-15);
        assert!((g.r(-1) + 0.05).abs() < 1e-15);
        assert!((g.r(10) - 1.05).abs() < 1e-15);
        assert!((g.z(0) - 0.1).abs() < 1e-15);
        assert_eq!(g.wrap_j(-1), 9);
        assert_eq!(g.wrap_j(10), 0);
    }

    #[test]
    fn periodic_offset_is_minimal_image() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        assert!((g.z_offset(0.95, 0.05) + 0.1).abs() < 1e-12);
        assert!((g.z_offset(0.05, 0.95) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn off_axis_ball_measure_approximates_volume() {
        let g = Grid::new(128, 128, 1.0, 1.0).unwrap();
        let ball = Ball {
            center_r: 0.5,
            center_z: 0.5,
            radius: 0.2,
        };
        let v: f64 = ball.cells(&g).iter().map(|c| c.2).sum();
        assert!((v / ball.volume() - 1.0).abs() < 0.02, "{v}");
    }
}
