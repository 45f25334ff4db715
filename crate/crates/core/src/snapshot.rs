//! `HMH1` snapshots: a fixed little-endian header followed by raw spectral
//! coefficients.
//!
//! ```text
//! offset  size  content
//! 0       4     b"HMH1"
//! 4       4     u32 n
//! 8       8     f64 L
//! 16      8     f64 t
//! 24      1     u8 component count c (a multiple of 3)
//! 25      ...   c blocks of n³ (re: f64, im: f64) pairs
//! ```
//!
//! Each block holds one Cartesian component in the in-memory order
//! `(ix·n + iy)·n + iz`, with FFT index ordering along each axis. Vector
//! fields are stored consecutively: `c = 3` is a single field, `c = 9` the
//! state `(u, b, J)`.

use std::io::{Read, Write};

use crate::dynamics::{HallParams, HallState};
use crate::field::{Grid, SpectralField};
use crate::{Complex64, Error, Result};

pub const MAGIC: &[u8; 4] = b"HMH1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub t: f64,
    pub fields: Vec<SpectralField>,
}

impl Snapshot {
    pub fn of_state(s: &HallState) -> Self {
        Self { grid: *s.grid(), t: s.t, fields: vec![s.u.clone(), s.b.clone(), s.j.clone()] }
    }

    /// Rebuilds a state from a `(u, b, J)` or `(u, b)` snapshot; in the
    /// latter case `J = ∇×b`.
    pub fn into_state(self, params: HallParams) -> Result<HallState> {
        let t = self.t;
        let mut it = self.fields.into_iter();
        match (it.next(), it.next(), it.next(), it.next()) {
            (Some(u), Some(b), Some(j), None) => HallState::from_parts(u, b, j, t, params),
            (Some(u), Some(b), None, None) => {
                let mut s = HallState::from_data(u, b, params)?;
                s.t = t;
                Ok(s)
            }
            _ => Err(Error::Snapshot("a state needs 6 or 9 components".into())),
        }
    }
}

pub fn write_snapshot<W: Write>(mut w: W, snap: &Snapshot) -> Result<()> {
    let comps = 3 * snap.fields.len();
    let count = u8::try_from(comps).map_err(|_| Error::Snapshot(format!("{comps} components exceed 255")))?;
    if snap.fields.iter().any(|f| f.grid() != &snap.grid) {
        return Err(Error::GridMismatch);
    }
    let n = u32::try_from(snap.grid.n()).map_err(|_| Error::Snapshot("grid too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&snap.grid.length().to_le_bytes())?;
    w.write_all(&snap.t.to_le_bytes())?;
    w.write_all(&[count])?;
    let mut buf = Vec::with_capacity(16 * snap.grid.len());
    for f in &snap.fields {
        for c in f.components() {
            buf.clear();
            for z in c {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let n = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let length = f64::from_le_bytes(read_array(&mut r)?);
    let t = f64::from_le_bytes(read_array(&mut r)?);
    let [count] = read_array::<1, _>(&mut r)?;
    let grid = Grid::new(n, length).map_err(|e| Error::Snapshot(e.to_string()))?;
    if count == 0 || count % 3 != 0 {
        return Err(Error::Snapshot(format!("component count {count} is not a positive multiple of 3")));
    }
    let len = grid.len();
    let mut bytes = vec![0u8; 16 * len];
    let mut fields = Vec::with_capacity(count as usize / 3);
    for _ in 0..count / 3 {
        let mut comps: [Vec<Complex64>; 3] = Default::default();
        for c in comps.iter_mut() {
            r.read_exact(&mut bytes).map_err(|e| Error::Snapshot(format!("truncated data: {e}")))?;
            *c = bytes
                .chunks_exact(16)
                .map(|b| {
                    let re = f64::from_le_bytes(b[..8].try_into().unwrap());
                    let im = f64::from_le_bytes(b[8..].try_into().unwrap());
                    Complex64::new(re, im)
                })
                .collect();
        }
        fields.push(SpectralField::from_components(grid, comps)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes".into()));
    }
    Ok(Snapshot { grid, t, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, Spectrum};

    #[test]
    fn header_layout() {
        let g = Grid::new(8, 3.0).unwrap();
        let snap = Snapshot { grid: g, t: 0.25, fields: vec![SpectralField::zeros(g)] };
        let mut out = Vec::new();
        write_snapshot(&mut out, &snap).unwrap();
        assert_eq!(&out[..4], b"HMH1");
        assert_eq!(u32::from_le_bytes(out[4..8].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(out[8..16].try_into().unwrap()), 3.0);
        assert_eq!(f64::from_le_bytes(out[16..24].try_into().unwrap()), 0.25);
        assert_eq!(out[24], 3);
        assert_eq!(out.len(), 25 + 3 * 512 * 16);
    }

    #[test]
    fn round_trip_state() {
        let g = Grid::new(8, 5.0).unwrap();
        let p = HallParams::new(1.0, 0.5, 0.3).unwrap();
        let mut s = HallState::from_data(random_field(g, &Spectrum::band(2.0), 1, true), random_field(g, &Spectrum::band(2.0), 2, true), p).unwrap();
        s.t = 1.5;
        let mut out = Vec::new();
        write_snapshot(&mut out, &Snapshot::of_state(&s)).unwrap();
        let back = read_snapshot(out.as_slice()).unwrap().into_state(p).unwrap();
        // bitwise equality of every coefficient
        for (a, b) in [(&back.u, &s.u), (&back.b, &s.b), (&back.j, &s.j)] {
            assert_eq!(a.components(), b.components());
        }
        assert_eq!(back.t, 1.5);
    }

    #[test]
    fn rejects_corruption() {
        let g = Grid::new(8, 1.0).unwrap();
        let mut out = Vec::new();
        write_snapshot(&mut out, &Snapshot { grid: g, t: 0.0, fields: vec![SpectralField::zeros(g)] }).unwrap();
        let mut bad = out.clone();
        bad[0] = b'X';
        assert!(matches!(read_snapshot(bad.as_slice()), Err(Error::Snapshot(_))));
        assert!(read_snapshot(&out[..out.len() - 1]).is_err());
        let mut long = out.clone();
        long.push(0);
        assert!(read_snapshot(long.as_slice()).is_err());
        let mut count = out;
        count[24] = 4;
        assert!(read_snapshot(count.as_slice()).is_err());
    }
}
