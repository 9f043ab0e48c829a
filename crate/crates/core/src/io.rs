//! Binary snapshot container and CSV export.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "AXNS" | version u32 | nr u64 | nz u64 | r_max f64 | z_len f64 | time f64
//! | ncomp u8 | parity u8 x ncomp | f64 x (nr * nz) per component, row-major
//! ```
//!
//! Only interior cells are stored. On load the axis ghost is rebuilt from
//! parity and the outer ghost copies the last interior row.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::{Parity, ScalarField, VectorFieldCyl};
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"AXNS";
pub const VERSION: u32 = 1;

/// One instant of one or more fields on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub components: Vec<ScalarField>,
}

impl Snapshot {
    pub fn scalar(time: f64, f: ScalarField) -> Self {
        Self {
            time,
            components: vec![f],
        }
    }

    pub fn vector(time: f64, v: &VectorFieldCyl) -> Self {
        Self {
            time,
            components: vec![v.vr.clone(), v.vtheta.clone(), v.vz.clone()],
        }
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.components.first().map(|c| c.grid())
    }

    pub fn into_scalar(mut self) -> Result<ScalarField> {
        if self.components.len() != 1 {
            return Err(Error::Format(format!(
                "expected 1 component, found {}",
                self.components.len()
            )));
        }
        Ok(self.components.pop().unwrap())
    }

    pub fn into_vector(self) -> Result<VectorFieldCyl> {
        let n = self.components.len();
        let mut it = self.components.into_iter();
        match (it.next(), it.next(), it.next(), it.next()) {
            (Some(a), Some(b), Some(c), None) => VectorFieldCyl::new(a, b, c),
            _ => Err(Error::Format(format!("expected 3 components, found {n}"))),
        }
    }
}

pub fn write_snapshot<W: Write>(w: &mut W, snap: &Snapshot) -> Result<()> {
    let grid = *snap
        .grid()
        .ok_or_else(|| Error::Format("snapshot has no components".into()))?;
    if snap.components.len() > u8::MAX as usize {
        return Err(Error::Format("too many components".into()));
    }
    for c in &snap.components {
        grid.ensure_same(c.grid())?;
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.nr() as u64).to_le_bytes())?;
    w.write_all(&(grid.nz() as u64).to_le_bytes())?;
    w.write_all(&grid.r_max().to_le_bytes())?;
    w.write_all(&grid.z_len().to_le_bytes())?;
    w.write_all(&snap.time.to_le_bytes())?;
    w.write_all(&[snap.components.len() as u8])?;
    for c in &snap.components {
        w.write_all(&[match c.parity() {
            Parity::Even => 0u8,
            Parity::Odd => 1u8,
        }])?;
    }
    let mut buf = Vec::with_capacity(grid.cells() * 8);
    for c in &snap.components {
        buf.clear();
        for v in c.interior() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Snapshot> {
    let magic: [u8; 4] = read_array(r)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let nr = u64::from_le_bytes(read_array(r)?) as usize;
    let nz = u64::from_le_bytes(read_array(r)?) as usize;
    let r_max = f64::from_le_bytes(read_array(r)?);
    let z_len = f64::from_le_bytes(read_array(r)?);
    let time = f64::from_le_bytes(read_array(r)?);
    let grid = Grid::new(nr, nz, r_max, z_len)?;
    let [ncomp] = read_array::<1, _>(r)?;
    let mut parities = Vec::with_capacity(ncomp as usize);
    for _ in 0..ncomp {
        let [p] = read_array::<1, _>(r)?;
        parities.push(match p {
            0 => Parity::Even,
            1 => Parity::Odd,
            x => return Err(Error::Format(format!("bad parity byte {x}"))),
        });
    }
    let mut bytes = vec![0u8; grid.cells() * 8];
    let mut vals = vec![0.0; grid.cells()];
    let mut components = Vec::with_capacity(parities.len());
    for parity in parities {
        r.read_exact(&mut bytes)
            .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
        for (v, b) in vals.iter_mut().zip(bytes.chunks_exact(8)) {
            *v = f64::from_le_bytes(b.try_into().unwrap());
        }
        components.push(ScalarField::from_interior(grid, parity, &vals)?);
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(Snapshot { time, components })
}

pub fn save(path: &std::path::Path, snap: &Snapshot) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(&mut w, snap)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<Snapshot> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read_snapshot(&mut r)
}

/// Writes `r,z,<names...>` rows for every interior cell.
pub fn write_csv<W: Write>(w: &mut W, names: &[&str], snap: &Snapshot) -> Result<()> {
    let grid = *snap
        .grid()
        .ok_or_else(|| Error::Format("snapshot has no components".into()))?;
    if names.len() != snap.components.len() {
        return Err(Error::InvalidInput("column names do not match components".into()));
    }
    writeln!(w, "r,z,{}", names.join(","))?;
    for i in 0..grid.nr() {
        for j in 0..grid.nz() {
            write!(w, "{},{}", grid.r(i as isize), grid.z(j))?;
            for c in &snap.components {
                write!(w, ",{}", c.get(i, j))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::new(8, 12, 1.5, 2.0).unwrap();
        let v = VectorFieldCyl::from_fn(g, |r, z| [r * z, r.sin(), (z * 3.0).cos()]);
        let snap = Snapshot::vector(0.125, &v);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &snap).unwrap();
        assert_eq!(&buf[..4], b"AXNS");
        assert_eq!(buf.len(), 4 + 4 + 8 * 5 + 1 + 3 + 3 * 96 * 8);
        let back = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(back.time, 0.125);
        let w = back.into_vector().unwrap();
        for (a, b) in w.components().iter().zip(v.components()) {
            assert_eq!(a.interior(), b.interior());
            assert_eq!(a.row(-1), b.row(-1));
        }
    }

    #[test]
    fn rejects_corrupt_input() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let snap = Snapshot::scalar(0.0, ScalarField::zeros(g, Parity::Even));
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &snap).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_snapshot(&mut bad.as_slice()), Err(Error::Format(_))));
        let short = &buf[..buf.len() - 3];
        assert!(read_snapshot(&mut &short[..]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_snapshot(&mut long.as_slice()).is_err());
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        let snap = Snapshot::scalar(0.0, ScalarField::constant(g, Parity::Even, 1.0));
        let mut out = Vec::new();
        write_csv(&mut out, &["value"], &snap).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.starts_with("r,z,value\n"));
    }
}
