//! Columnar binary cache for path bundles, and CSV export of terminals.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "STBLBNDL"
//! version    u32
//! steps      u64
//! paths      u64
//! fields     u32 count, then per field: u32 length + UTF-8 name
//! params     7 x f64  (mu kappa theta sigma v0 rho horizon)
//! seed       u64
//! data       per field, paths x (steps + 1) f64, path-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::heston::{HestonParams, PathBundle};
use super::{PathArray, TimeGrid};
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 8] = b"STBLBNDL";
pub const CACHE_VERSION: u32 = 1;

const FIELDS: [&str; 5] = ["B", "W", "V", "S", "logZ"];

fn parse_err(reason: impl Into<String>) -> Error {
    Error::Parse {
        what: "bundle cache".into(),
        reason: reason.into(),
    }
}

pub fn write_bundle(path: &Path, bundle: &PathBundle) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(bundle.grid.steps() as u64).to_le_bytes())?;
    w.write_all(&(bundle.paths() as u64).to_le_bytes())?;
    w.write_all(&(FIELDS.len() as u32).to_le_bytes())?;
    for f in FIELDS {
        w.write_all(&(f.len() as u32).to_le_bytes())?;
        w.write_all(f.as_bytes())?;
    }
    let p = &bundle.params;
    for v in [p.mu, p.kappa, p.theta, p.sigma, p.v0, p.rho, p.horizon] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&bundle.seed.to_le_bytes())?;
    for arr in [&bundle.b, &bundle.w, &bundle.v, &bundle.s, &bundle.log_z] {
        for v in arr.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_bundle(path: &Path) -> Result<PathBundle> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(parse_err("bad magic"));
    }
    let version = read_u32(&mut r)?;
    if version != CACHE_VERSION {
        return Err(parse_err(format!("unsupported version {version}")));
    }
    let steps = read_u64(&mut r)? as usize;
    let paths = read_u64(&mut r)? as usize;
    let count = read_u32(&mut r)? as usize;
    let mut names = Vec::with_capacity(count);
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        names.push(String::from_utf8(buf).map_err(|_| parse_err("field name is not UTF-8"))?);
    }
    if names != FIELDS {
        return Err(parse_err(format!("unexpected field list {names:?}")));
    }
    let mut vals = [0.0; 7];
    for v in &mut vals {
        *v = read_f64(&mut r)?;
    }
    let params = HestonParams::new(vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6])?;
    let seed = read_u64(&mut r)?;
    let grid = TimeGrid::new(params.horizon, steps)?;
    let nodes = grid.nodes();
    let mut arrays = Vec::with_capacity(FIELDS.len());
    let mut buf = vec![0u8; paths * nodes * 8];
    for _ in FIELDS {
        r.read_exact(&mut buf)?;
        let data = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        arrays.push(PathArray::from_vec(nodes, data)?);
    }
    let mut it = arrays.into_iter();
    let mut next = || it.next().expect("field count checked");
    Ok(PathBundle {
        params,
        grid,
        seed,
        b: next(),
        w: next(),
        v: next(),
        s: next(),
        log_z: next(),
    })
}

/// One row per path: index, terminal `B`, `W`, `V`, `S`, `Z`, plus the
/// regeneration metadata.
pub fn write_terminals_csv(path: &Path, bundle: &PathBundle) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "path,b_t,w_t,v_t,s_t,z_t,seed,paths,steps")?;
    for i in 0..bundle.paths() {
        writeln!(
            w,
            "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
            bundle.b.terminal(i),
            bundle.w.terminal(i),
            bundle.v.terminal(i),
            bundle.s.terminal(i),
            bundle.log_z.terminal(i).exp(),
            bundle.seed,
            bundle.paths(),
            bundle.grid.steps()
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::simulate_heston_market;
    use crate::rng::RandomStream;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = HestonParams::new(0.3, 2.0, 1.0, 1.0, 1.0, 0.2, 1.0).unwrap();
        let g = TimeGrid::new(1.0, 8).unwrap();
        let b = simulate_heston_market(&p, &g, &RandomStream::new(1), 7).unwrap();
        let file = dir.path().join("b.bin");
        write_bundle(&file, &b).unwrap();
        assert_eq!(read_bundle(&file).unwrap(), b);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("junk.bin");
        std::fs::write(&file, b"NOTABUNDLE--------------").unwrap();
        assert!(matches!(read_bundle(&file), Err(Error::Parse { .. })));
    }
}
