//! Raw spectra files.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `BRSPEC01` |
//! | 32 | SHA-256 of the canonical model document |
//! | 8 | `N` (u64) |
//! | 8 | seed (u64) |
//! | 1 | kind: 0 eigenvalues, 1 singular values squared |
//! | 8 | sample count (u64) |
//!
//! then per sample a u64 structural zero count, a u64 value count and the
//! values: interleaved `re, im` f64 pairs for eigenvalues, one f64 per value
//! for singular spectra.

use bures_core::mc::SpectrumSample;
use bures_core::model::SpectrumKind;
use bures_core::Complex64;
use std::io::{self, Read, Write};

pub const MAGIC: &[u8; 8] = b"BRSPEC01";

#[derive(Clone, Debug, PartialEq)]
pub struct SpectraFile {
    pub model_hash: [u8; 32],
    pub n: u64,
    pub seed: u64,
    pub kind: SpectrumKind,
    pub samples: Vec<SpectrumSample>,
}

pub fn write_spectra<W: Write>(mut w: W, file: &SpectraFile) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&file.model_hash)?;
    w.write_all(&file.n.to_le_bytes())?;
    w.write_all(&file.seed.to_le_bytes())?;
    w.write_all(&[match file.kind {
        SpectrumKind::Eigenvalue => 0,
        SpectrumKind::Singular => 1,
    }])?;
    w.write_all(&(file.samples.len() as u64).to_le_bytes())?;
    for s in &file.samples {
        w.write_all(&(s.zero_count as u64).to_le_bytes())?;
        w.write_all(&(s.values.len() as u64).to_le_bytes())?;
        for z in &s.values {
            w.write_all(&z.re.to_le_bytes())?;
            if file.kind == SpectrumKind::Eigenvalue {
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn u64_of<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn f64_of<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

pub fn read_spectra<R: Read>(mut r: R) -> io::Result<SpectraFile> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(invalid("not a spectra file"));
    }
    let mut model_hash = [0u8; 32];
    r.read_exact(&mut model_hash)?;
    let n = u64_of(&mut r)?;
    let seed = u64_of(&mut r)?;
    let mut k = [0u8; 1];
    r.read_exact(&mut k)?;
    let kind = match k[0] {
        0 => SpectrumKind::Eigenvalue,
        1 => SpectrumKind::Singular,
        _ => return Err(invalid("unknown spectrum kind")),
    };
    let count = u64_of(&mut r)?;
    let mut samples = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let zero_count = u64_of(&mut r)? as usize;
        let len = u64_of(&mut r)? as usize;
        let mut values = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            let re = f64_of(&mut r)?;
            let im = if kind == SpectrumKind::Eigenvalue { f64_of(&mut r)? } else { 0.0 };
            values.push(Complex64::new(re, im));
        }
        samples.push(SpectrumSample {
            kind,
            values,
            n_outer: n as usize,
            zero_count,
        });
    }
    Ok(SpectraFile {
        model_hash,
        n,
        seed,
        kind,
        samples,
    })
}
