//! Binary checkpoints: magic, format version, run header, then per site its
//! three dimensions followed by interleaved (re, im) little-endian f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array3;

use super::chain::{Chain, Truncation};
use super::{MpsError, TimeBinMps};
use crate::C64;

pub const MAGIC: &[u8; 8] = b"WGQEDMPS";
pub const VERSION: u32 = 1;

pub fn write_state<W: Write>(w: &mut W, mps: &TimeBinMps) -> Result<(), MpsError> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    for v in [mps.d_bin, mps.delay, mps.step, mps.output_capacity, mps.truncation.chi_max, mps.chain.center, mps.chain.len()] {
        w.write_u64::<LittleEndian>(v as u64)?;
    }
    w.write_f64::<LittleEndian>(mps.truncation.cutoff)?;
    w.write_f64::<LittleEndian>(mps.truncation.abort_factor)?;
    for a in &mps.chain.sites {
        let (l, d, r) = a.dim();
        for v in [l, d, r] {
            w.write_u64::<LittleEndian>(v as u64)?;
        }
        for z in a.iter() {
            w.write_f64::<LittleEndian>(z.re)?;
            w.write_f64::<LittleEndian>(z.im)?;
        }
    }
    Ok(())
}

pub fn read_state<R: Read>(r: &mut R) -> Result<TimeBinMps, MpsError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(MpsError::Checkpoint("not an MPS checkpoint".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(MpsError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut h = [0usize; 7];
    for v in h.iter_mut() {
        *v = r.read_u64::<LittleEndian>()? as usize;
    }
    let [d_bin, delay, step, output_capacity, chi_max, center, n_sites] = h;
    let cutoff = r.read_f64::<LittleEndian>()?;
    let abort_factor = r.read_f64::<LittleEndian>()?;
    if n_sites < 4 * delay + 1 || center >= n_sites {
        return Err(MpsError::Checkpoint("inconsistent header".into()));
    }
    let mut sites = Vec::with_capacity(n_sites);
    let mut prev_right = None;
    for _ in 0..n_sites {
        let l = r.read_u64::<LittleEndian>()? as usize;
        let d = r.read_u64::<LittleEndian>()? as usize;
        let rr = r.read_u64::<LittleEndian>()? as usize;
        if prev_right.is_some_and(|p| p != l) || l.checked_mul(d).and_then(|x| x.checked_mul(rr)).is_none_or(|n| n > 1 << 28) {
            return Err(MpsError::Checkpoint("bad site dimensions".into()));
        }
        prev_right = Some(rr);
        let mut data = Vec::with_capacity(l * d * rr);
        for _ in 0..l * d * rr {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            data.push(C64::new(re, im));
        }
        sites.push(Array3::from_shape_vec((l, d, rr), data).map_err(|e| MpsError::Checkpoint(e.to_string()))?);
    }
    Ok(TimeBinMps {
        chain: Chain::new(sites, center),
        d_bin,
        delay,
        step,
        output_capacity,
        truncation: Truncation { cutoff, chi_max, abort_factor },
        truncation_log: Vec::new(),
    })
}

pub fn save(path: &Path, mps: &TimeBinMps) -> Result<(), MpsError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_state(&mut w, mps)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<TimeBinMps, MpsError> {
    read_state(&mut BufReader::new(File::open(path)?))
}
