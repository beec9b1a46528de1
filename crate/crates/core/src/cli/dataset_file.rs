//! Snapshot container: magic `PODROM01`, `u32` header `(N_h, N_s, N_t, p)`, `f64` domain
//! volume, `N_s·p` parameters, `N_t` times, then the snapshots column by column in
//! sample-major order. All values little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::codec::{expect_magic, Decoder, Encoder};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::solvers::{ParamPoint, SnapshotSet};

pub const DATASET_MAGIC: &[u8; 8] = b"PODROM01";

fn header_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} does not fit the u32 header")))
}

pub fn encode_dataset<W: Write>(set: &SnapshotSet, out: W) -> Result<W> {
    let mut enc = Encoder::new(out);
    enc.bytes(DATASET_MAGIC)?;
    enc.u32(header_u32(set.n_h(), "N_h")?)?;
    enc.u32(header_u32(set.n_s, "N_s")?)?;
    enc.u32(header_u32(set.n_t, "N_t")?)?;
    enc.u32(header_u32(set.p(), "p")?)?;
    enc.f64(set.domain_volume)?;
    for mu in set.params() {
        enc.f64s(&mu)?;
    }
    enc.f64s(&set.times())?;
    let t = set.u.transpose();
    enc.f64s(t.data())?;
    Ok(enc.into_inner())
}

pub fn decode_dataset<R: Read>(input: R) -> Result<SnapshotSet> {
    let mut dec = Decoder::new(input);
    expect_magic(&mut dec, DATASET_MAGIC, "dataset")?;
    let n_h = dec.u32()? as usize;
    let n_s = dec.u32()? as usize;
    let n_t = dec.u32()? as usize;
    let p = dec.u32()? as usize;
    let volume = dec.f64()?;
    let params: Vec<Vec<f64>> = (0..n_s).map(|_| dec.f64s(p)).collect::<Result<_>>()?;
    let times = dec.f64s(n_t)?;
    let cols = n_s * n_t;
    let raw = dec.f64s(n_h * cols)?;
    dec.finish()?;
    let u = DenseMatrix::from_row_major(cols, n_h, raw)?.transpose();
    let points = params
        .iter()
        .flat_map(|mu| times.iter().map(move |&t| ParamPoint { mu: mu.clone(), t }))
        .collect();
    SnapshotSet::new(u, points, n_s, n_t, volume)
}

pub fn write_dataset(path: &Path, set: &SnapshotSet) -> Result<()> {
    let w = encode_dataset(set, BufWriter::new(File::create(path)?))?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<SnapshotSet> {
    decode_dataset(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{build_dataset, ProblemSpec};

    #[test]
    fn header_layout() {
        let mut spec = ProblemSpec::heat1d();
        spec.n_h = 5;
        spec.time_steps = 20;
        let set = build_dataset(&spec, 2, 3, 1).unwrap();
        let bytes = encode_dataset(&set, Vec::new()).unwrap();
        assert_eq!(&bytes[..8], b"PODROM01");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 1);
        assert_eq!(bytes.len(), 8 + 16 + 8 + 8 * (2 + 3 + 5 * 6));
        // first snapshot column starts right after the times
        let off = 8 + 16 + 8 + 8 * 5;
        let first = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        assert_eq!(first, set.u.get(0, 0));
        let second = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
        assert_eq!(second, set.u.get(1, 0));
        let back = decode_dataset(bytes.as_slice()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(decode_dataset(&b"PODROM02xxxx"[..]), Err(Error::Format(_))));
        let set = build_dataset(&ProblemSpec::benchmark(3.0), 2, 1, 1).unwrap();
        let bytes = encode_dataset(&set, Vec::new()).unwrap();
        assert!(decode_dataset(&bytes[..bytes.len() - 1]).is_err());
    }
}
