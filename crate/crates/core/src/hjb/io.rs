use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::{fmt17, Scalar};

use super::grid::{Geometry, GridSpec};
use super::solver::{FeedbackTable, Slice, ValueGrid};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"HMMVGRID";
pub const SNAPSHOT_VERSION: u32 = 1;

fn header(n: usize) -> String {
    let mut h = String::from("t,i");
    for side in ["a", "b"] {
        for d in 1..=n {
            h.push_str(&format!(",c_{side}_{d}"));
        }
    }
    h
}

fn write_rows<S: Scalar, W: Write>(
    w: &mut W,
    geo: &Geometry<S>,
    t: S,
    mut tail: impl FnMut(usize) -> String,
) -> Result<()> {
    let t = fmt17(t);
    for ii in 0..geo.n_inv {
        let i = geo.inventory(ii);
        for a in 0..geo.p {
            for b in 0..geo.p {
                let mut line = format!("{t},{i}");
                for &c in geo.node_coords(a).iter().chain(geo.node_coords(b)) {
                    line.push(',');
                    line.push_str(&fmt17(c));
                }
                line.push(',');
                line.push_str(&tail(geo.index(ii, a, b)));
                writeln!(w, "{line}")?;
            }
        }
    }
    Ok(())
}

impl<S: Scalar> ValueGrid<S> {
    /// Every stored slice as `t,i,c_a_1..,c_b_1..,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},value", header(self.geometry.n))?;
        for s in &self.slices {
            write_rows(&mut w, &self.geometry, self.time(s.step), |k| fmt17(s.values[k]))?;
        }
        Ok(())
    }

    /// Versioned little-endian binary snapshot: magic, version, the grid
    /// spec as JSON, then the stored slices.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        let spec = serde_json::to_vec(&self.spec)?;
        w.write_all(&(spec.len() as u64).to_le_bytes())?;
        w.write_all(&spec)?;
        w.write_all(&(self.steps as u64).to_le_bytes())?;
        w.write_all(&self.dt.as_f64().to_le_bytes())?;
        w.write_all(&(self.slices.len() as u64).to_le_bytes())?;
        for s in &self.slices {
            w.write_all(&(s.step as u64).to_le_bytes())?;
            w.write_all(&(s.values.len() as u64).to_le_bytes())?;
            for v in &s.values {
                w.write_all(&v.as_f64().to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::config("not a value-grid snapshot"));
        }
        let version = read_u32(&mut r)?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::config(format!("unsupported snapshot version {version}")));
        }
        let len = read_u64(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        let spec: GridSpec<S> = serde_json::from_slice(&buf)?;
        let steps = read_u64(&mut r)? as usize;
        let dt = S::lit(read_f64(&mut r)?);
        let count = read_u64(&mut r)? as usize;
        let geometry = Geometry::new(&spec);
        let mut slices = Vec::with_capacity(count);
        for _ in 0..count {
            let step = read_u64(&mut r)? as usize;
            let n = read_u64(&mut r)? as usize;
            if n != geometry.cells() {
                return Err(Error::config(format!(
                    "slice has {n} cells, grid has {}",
                    geometry.cells()
                )));
            }
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                values.push(S::lit(read_f64(&mut r)?));
            }
            slices.push(Slice { step, values });
        }
        Ok(Self {
            spec,
            geometry,
            steps,
            dt,
            slices,
        })
    }
}

impl<S: Scalar> FeedbackTable<S> {
    /// Every stored slice as `t,i,c_a_1..,c_b_1..,ask,bid`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},ask,bid", header(self.geometry.n))?;
        for s in &self.slices {
            let t = S::from_usize_lossy(s.step) * self.dt;
            write_rows(&mut w, &self.geometry, t, |k| format!("{},{}", fmt17(s.ask[k]), fmt17(s.bid[k])))?;
        }
        Ok(())
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
