//! Binary field snapshots.
//!
//! Layout: magic `GLF1`, `u64` n, `f64` t, `f64` ε, then `2·n²` `f64` values,
//! component-major then row-major. Everything little-endian.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::torus::{GridSpec, VectorField};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GLF1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub eps: f64,
    pub field: VectorField,
}

pub fn encode(field: &VectorField, t: f64, eps: f64, out: &mut impl Write) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(field.grid().n() as u64).to_le_bytes())?;
    out.write_all(&t.to_le_bytes())?;
    out.write_all(&eps.to_le_bytes())?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn decode(input: &mut impl Read) -> Result<Snapshot> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Invalid(format!("bad snapshot magic {magic:?}")));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let t = f64::from_le_bytes(word);
    input.read_exact(&mut word)?;
    let eps = f64::from_le_bytes(word);
    let grid = GridSpec::new(n)?;
    let mut bytes = vec![0u8; 16 * grid.node_count()];
    input.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(Snapshot {
        t,
        eps,
        field: VectorField::from_values(grid, values)?,
    })
}

/// Writes atomically: a temporary sibling is renamed over `path`.
pub fn write(path: &Path, field: &VectorField, t: f64, eps: f64) -> Result<()> {
    let tmp = path.with_extension("glf.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        encode(field, t, eps, &mut w)?;
        w.flush()?;
        w.get_ref().sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Snapshot> {
    let mut r = BufReader::new(File::open(path)?);
    decode(&mut r).map_err(|e| Error::Snapshot {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
