//! Divergence-free radial-axial drifts `b = b1 + b2 + b3`.
//!
//! `b1` carries the finite hollowed energy, `b2 = curl(B e_θ)` the bounded
//! mean oscillation stream and `b3` the `1/r` singular part. All three have
//! `v^θ ≡ 0`.
//!
//! The discrete curl and divergence share one stencil: fluxes through the
//! radial face `r_{i+1/2}` are the average of the two adjacent cells and the
//! axial difference is centered. Divergence of a curl is then zero up to
//! roundoff rather than truncation error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Parity, ScalarField, VectorFieldCyl};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum B1Spec {
    #[default]
    None,
    /// Curl of a bump supported in the spherical shell `r_in < |x - x0| < r_out`.
    Shell { amplitude: f64, r_in: f64, r_out: f64 },
    /// Constant `amplitude e_z`.
    UniformAxial { amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum B2Spec {
    #[default]
    None,
    /// `B = amplitude r`, a uniform axial flow of speed `2 amplitude`.
    Linear { amplitude: f64 },
    /// `B = amplitude r sin(2π mode z / L)`.
    RSin { amplitude: f64, mode: u32 },
    /// `B = amplitude r exp(-|x - x0|² / width²)`.
    Gaussian { amplitude: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum B3Spec {
    #[default]
    None,
    /// `(c / r) e_z`.
    ScaledInverseR { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    #[serde(default)]
    pub b1: B1Spec,
    #[serde(default)]
    pub b2: B2Spec,
    #[serde(default)]
    pub b3: B3Spec,
}

impl DriftSpec {
    pub fn is_zero(&self) -> bool {
        matches!(
            (self.b1, self.b2, self.b3),
            (B1Spec::None, B2Spec::None, B3Spec::None)
        )
    }

    /// Realizes the drift on `grid`, centering compact profiles at `(0, z0)`.
    pub fn build(&self, grid: Grid, z0: f64) -> Result<DriftDecomposition> {
        let b1 = match self.b1 {
            B1Spec::None => VectorFieldCyl::zeros(grid),
            B1Spec::Shell {
                amplitude,
                r_in,
                r_out,
            } => make_b1_shell(grid, z0, amplitude, r_in, r_out)?,
            B1Spec::UniformAxial { amplitude } => {
                finite("b1 amplitude", amplitude)?;
                VectorFieldCyl::from_fn(grid, |_, _| [0.0, 0.0, amplitude])
            }
        };
        let stream = match self.b2 {
            B2Spec::None => ScalarField::zeros(grid, Parity::Odd),
            B2Spec::Linear { amplitude } => {
                finite("b2 amplitude", amplitude)?;
                ScalarField::from_fn(grid, Parity::Odd, |r, _| amplitude * r)
            }
            B2Spec::RSin { amplitude, mode } => {
                finite("b2 amplitude", amplitude)?;
                let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.z_len();
                ScalarField::from_fn(grid, Parity::Odd, |r, z| amplitude * r * (k * z).sin())
            }
            B2Spec::Gaussian { amplitude, width } => {
                finite("b2 amplitude", amplitude)?;
                if !(width > 0.0) {
                    return Err(Error::InvalidInput(format!("gaussian width {width} must be positive")));
                }
                ScalarField::from_fn(grid, Parity::Odd, |r, z| {
                    let dz = grid.z_offset(z, z0);
                    amplitude * r * (-(r * r + dz * dz) / (width * width)).exp()
                })
            }
        };
        let b2 = make_b2_from_stream(&stream)?;
        let b3 = match self.b3 {
            B3Spec::None => VectorFieldCyl::zeros(grid),
            B3Spec::ScaledInverseR { c } => make_b3_scaled(grid, c)?,
        };
        compose(b1, b2, b3, stream)
    }
}

fn finite(what: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain { what, value: v })
    }
}

/// The three parts, their stream function and the assembled total.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDecomposition {
    b1: VectorFieldCyl,
    b2: VectorFieldCyl,
    b3: VectorFieldCyl,
    stream: ScalarField,
    total: VectorFieldCyl,
}

impl DriftDecomposition {
    pub fn zero(grid: Grid) -> Self {
        let z = VectorFieldCyl::zeros(grid);
        Self {
            b1: z.clone(),
            b2: z.clone(),
            b3: z.clone(),
            stream: ScalarField::zeros(grid, Parity::Odd),
            total: z,
        }
    }

    pub fn b1(&self) -> &VectorFieldCyl {
        &self.b1
    }

    pub fn b2(&self) -> &VectorFieldCyl {
        &self.b2
    }

    pub fn b3(&self) -> &VectorFieldCyl {
        &self.b3
    }

    /// θ-component of the stream function of `b2`.
    pub fn stream(&self) -> &ScalarField {
        &self.stream
    }

    pub fn total(&self) -> &VectorFieldCyl {
        &self.total
    }

    pub fn grid(&self) -> &Grid {
        self.total.grid()
    }

    /// `b ↦ Q b(Q x)`: the same samples on a grid shrunk by `1/Q`.
    ///
    /// The stream function transforms as `B ↦ B(Q x)`, so its samples are kept.
    pub fn rescaled(&self, q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "scale factor",
                value: q,
            });
        }
        let grid = self.grid().scaled(1.0 / q)?;
        let map = |v: &VectorFieldCyl| -> Result<VectorFieldCyl> {
            let c = |f: &ScalarField| ScalarField::from_interior(grid, f.parity(), f.interior()).map(|s| s.scaled(q));
            VectorFieldCyl::new(c(&v.vr)?, c(&v.vtheta)?, c(&v.vz)?)
        };
        compose(
            map(&self.b1)?,
            map(&self.b2)?,
            map(&self.b3)?,
            ScalarField::from_interior(grid, Parity::Odd, self.stream.interior())?,
        )
    }
}

/// `(c / r) e_z`, so that `r |b3| = c` at every cell.
pub fn make_b3_scaled(grid: Grid, c: f64) -> Result<VectorFieldCyl> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "b3 amplitude",
            value: c,
        });
    }
    Ok(VectorFieldCyl::from_fn(grid, |r, _| [0.0, 0.0, c / r]))
}

/// Discrete curl of `B e_θ`: `b^r = -∂_z B`, `b^z = (1/r) ∂_r (r B)`.
pub fn make_b2_from_stream(stream: &ScalarField) -> Result<VectorFieldCyl> {
    stream.expect_parity(Parity::Odd)?;
    let g = *stream.grid();
    let nr = g.nr() as isize;
    let (dr, dz) = (g.dr(), g.dz());
    let mut br = ScalarField::zeros(g, Parity::Odd);
    let mut bz = ScalarField::zeros(g, Parity::Even);
    for i in -1..=nr {
        for j in 0..g.nz() {
            let jj = j as isize;
            br.set_at(i, j, -(stream.at(i, jj + 1) - stream.at(i, jj - 1)) / (2.0 * dz));
        }
    }
    for i in 0..nr {
        let (rm, rp, rc) = (g.r_face(i - 1), g.r_face(i), g.r(i));
        for j in 0..g.nz() {
            let jj = j as isize;
            let c = stream.at(i, jj);
            let fp = rp * 0.5 * (c + stream.at(i + 1, jj));
            let fm = rm * 0.5 * (stream.at(i - 1, jj) + c);
            bz.set(i as usize, j, (fp - fm) / (rc * dr));
        }
    }
    bz.copy_outer_ghost();
    bz.fill_axis_ghost();
    VectorFieldCyl::new(br, ScalarField::zeros(g, Parity::Odd), bz)
}

/// Smooth bump `16 s²(1-s)²` on `s ∈ (0, 1)` and its derivative.
fn bump(s: f64) -> (f64, f64) {
    if s <= 0.0 || s >= 1.0 {
        (0.0, 0.0)
    } else {
        let q = s * (1.0 - s);
        (16.0 * q * q, 32.0 * q * (1.0 - 2.0 * s))
    }
}

/// Stream profile `amplitude r χ(|x - x0|)` with `χ` a bump on the shell.
pub fn shell_stream(grid: Grid, z0: f64, amplitude: f64, r_in: f64, r_out: f64) -> ScalarField {
    ScalarField::from_fn(grid, Parity::Odd, |r, z| {
        let dz = grid.z_offset(z, z0);
        let rho = (r * r + dz * dz).sqrt();
        amplitude * r * bump((rho - r_in) / (r_out - r_in)).0
    })
}

/// Analytic velocity of the shell profile at `(r, dz)` relative to its center.
pub fn shell_velocity(amplitude: f64, r_in: f64, r_out: f64, r: f64, dz: f64) -> [f64; 2] {
    let rho = (r * r + dz * dz).sqrt();
    let w = r_out - r_in;
    let (chi, dchi) = bump((rho - r_in) / w);
    if rho == 0.0 {
        return [0.0, 2.0 * amplitude * chi];
    }
    let d = dchi / w / rho;
    [-amplitude * r * d * dz, amplitude * (2.0 * chi + r * r * d)]
}

/// Divergence-free field supported in a spherical shell around `(0, z0)`.
pub fn make_b1_shell(grid: Grid, z0: f64, amplitude: f64, r_in: f64, r_out: f64) -> Result<VectorFieldCyl> {
    if !(r_in > 0.0 && r_in < r_out && r_out <= grid.r_max() && r_out <= 0.5 * grid.z_len()) {
        return Err(Error::InvalidInput(format!(
            "shell bounds ({r_in}, {r_out}) must satisfy 0 < r_in < r_out <= min(r_max, z_len/2)"
        )));
    }
    finite("b1 amplitude", amplitude)?;
    make_b2_from_stream(&shell_stream(grid, z0, amplitude, r_in, r_out))
}

/// Componentwise sum, keeping the parts for attribution.
pub fn compose(
    b1: VectorFieldCyl,
    b2: VectorFieldCyl,
    b3: VectorFieldCyl,
    stream: ScalarField,
) -> Result<DriftDecomposition> {
    let g = *b1.grid();
    for p in [&b2, &b3] {
        g.ensure_same(p.grid())?;
    }
    g.ensure_same(stream.grid())?;
    stream.expect_parity(Parity::Odd)?;
    for p in [&b1, &b2, &b3] {
        if p.vtheta.sup_abs() != 0.0 {
            return Err(Error::InvalidInput("drift parts must have zero swirl".into()));
        }
    }
    let total = b1.add(&b2)?.add(&b3)?;
    Ok(DriftDecomposition {
        b1,
        b2,
        b3,
        stream,
        total,
    })
}

/// Conservative `∂_r b^r + b^r / r + ∂_z b^z` at cell centers.
///
/// Radial face fluxes `r_{i+1/2} (b_i + b_{i+1}) / 2` vanish on the axis; the
/// outer face uses the ghost row.
pub fn divergence(b: &VectorFieldCyl) -> ScalarField {
    let g = *b.grid();
    let (dr, dz) = (g.dr(), g.dz());
    let mut out = ScalarField::zeros(g, Parity::Even);
    for i in 0..g.nr() as isize {
        let (rm, rp, rc) = (g.r_face(i - 1), g.r_face(i), g.r(i));
        for j in 0..g.nz() {
            let jj = j as isize;
            let c = b.vr.at(i, jj);
            let fp = rp * 0.5 * (c + b.vr.at(i + 1, jj));
            let fm = if i == 0 {
                0.0
            } else {
                rm * 0.5 * (b.vr.at(i - 1, jj) + c)
            };
            let dzw = (b.vz.at(i, jj + 1) - b.vz.at(i, jj - 1)) / (2.0 * dz);
            out.set(i as usize, j, (fp - fm) / (rc * dr) + dzw);
        }
    }
    out.copy_outer_ghost();
    out.fill_axis_ghost();
    out
}
