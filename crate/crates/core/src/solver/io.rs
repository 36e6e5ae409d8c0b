//! Snapshot persistence.
//!
//! Binary layout, all little-endian:
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `b"NFPE"`                           |
//! | 4      | 4    | format version, `u32` (= 1)               |
//! | 8      | 4    | half-resolution `I`, `u32`                |
//! | 12     | 8    | record time, `f64`                        |
//! | 20     | 32   | domain `a, b, c, d`, `f64` each           |
//! | 52     | 24   | `alpha, eps_k, eps_s`, `f64` each         |
//! | 76     | 8 m  | `m = (2I-1)^2` values `P_{i,j}`, `f64`    |
//!
//! Values are row-major with `i` (the `v`/`k` axis) outer and `j` inner,
//! each running from `-I+1` to `I-1`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stable::NoiseSpec;

use super::field::DensityField;
use super::grid::DomainBox;

pub const MAGIC: &[u8; 4] = b"NFPE";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 76;

/// A density field together with the run metadata stored alongside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<T> {
    pub field: DensityField<T>,
    pub domain: DomainBox<T>,
    pub noise: NoiseSpec<T>,
}

pub fn write_snapshot<T: Scalar, W: Write>(mut out: W, snap: &Snapshot<T>) -> Result<()> {
    let f = |x: T| x.to_f64_lossy().to_le_bytes();
    let half = u32::try_from(snap.field.half()).map_err(|_| Error::Format("grid too large".into()))?;
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.extend_from_slice(&half.to_le_bytes());
    header.extend_from_slice(&f(snap.field.time));
    for x in [snap.domain.a, snap.domain.b, snap.domain.c, snap.domain.d] {
        header.extend_from_slice(&f(x));
    }
    for x in [snap.noise.alpha, snap.noise.eps_k, snap.noise.eps_s] {
        header.extend_from_slice(&f(x));
    }
    debug_assert_eq!(header.len(), HEADER_LEN);
    out.write_all(&header)?;
    let mut body = Vec::with_capacity(8 * snap.field.values().len());
    for &v in snap.field.values() {
        body.extend_from_slice(&f(v));
    }
    out.write_all(&body)?;
    Ok(())
}

pub fn read_snapshot<T: Scalar, R: Read>(mut input: R) -> Result<Snapshot<T>> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic, not an NFPE snapshot".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| T::lit(f64::from_le_bytes(header[o..o + 8].try_into().unwrap()));
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let half = u32_at(8) as usize;
    if half < 1 {
        return Err(Error::Format("half-resolution must be >= 1".into()));
    }
    let time = f64_at(12);
    let domain = DomainBox { a: f64_at(20), b: f64_at(28), c: f64_at(36), d: f64_at(44) };
    let noise = NoiseSpec { alpha: f64_at(52), eps_k: f64_at(60), eps_s: f64_at(68) };
    let n = 2 * half - 1;
    let mut body = vec![0u8; 8 * n * n];
    input.read_exact(&mut body).map_err(|e| Error::Format(format!("truncated body: {e}")))?;
    let values = body
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after snapshot body".into()));
    }
    Ok(Snapshot { field: DensityField::from_values(half, values, time)?, domain, noise })
}

/// CSV with header `i,j,v,w,k,s,P`, one line per interior node in storage order.
///
/// Floats use Rust's shortest round-trip formatting.
pub fn write_snapshot_csv<T: Scalar, W: Write>(mut out: W, snap: &Snapshot<T>) -> Result<()> {
    writeln!(out, "i,j,v,w,k,s,P")?;
    let lim = snap.field.half() as isize - 1;
    for i in -lim..=lim {
        for j in -lim..=lim {
            let (v, w) = snap.field.reference_point(i, j);
            let (k, s) = snap.domain.from_reference((v, w));
            writeln!(
                out,
                "{i},{j},{},{},{},{},{}",
                v.to_f64_lossy(),
                w.to_f64_lossy(),
                k.to_f64_lossy(),
                s.to_f64_lossy(),
                snap.field.get(i, j).to_f64_lossy()
            )?;
        }
    }
    Ok(())
}
