//! Little-endian primitive readers and writers shared by the binary file formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub struct Encoder<W: Write> {
    inner: W,
}

impl<W: Write> Encoder<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner.write_all(b)?;
        Ok(())
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn usize(&mut self, v: usize) -> Result<()> {
        self.u64(v as u64)
    }

    pub fn bool(&mut self, v: bool) -> Result<()> {
        self.bytes(&[u8::from(v)])
    }

    pub fn f64s(&mut self, v: &[f64]) -> Result<()> {
        for &x in v {
            self.f64(x)?;
        }
        Ok(())
    }

    /// Length-prefixed vector.
    pub fn vec(&mut self, v: &[f64]) -> Result<()> {
        self.usize(v.len())?;
        self.f64s(v)
    }

    pub fn string(&mut self, s: &str) -> Result<()> {
        self.usize(s.len())?;
        self.bytes(s.as_bytes())
    }

    pub fn matrix(&mut self, m: &DenseMatrix) -> Result<()> {
        self.usize(m.rows())?;
        self.usize(m.cols())?;
        self.f64s(m.data())
    }
}

pub struct Decoder<R: Read> {
    inner: R,
}

impl<R: Read> Decoder<R> {
    pub fn new(inner: R) -> Self {
        Self { inner }
    }

    pub fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("file is truncated".into()),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        let v = self.bytes(K)?;
        Ok(v.try_into().expect("exact length"))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::Format(format!("length {v} does not fit in memory")))
    }

    /// A length read from the file, refused if absurdly large.
    pub fn len(&mut self, limit: usize) -> Result<usize> {
        let n = self.usize()?;
        if n > limit {
            return Err(Error::Format(format!("length field {n} exceeds limit {limit}")));
        }
        Ok(n)
    }

    pub fn bool(&mut self) -> Result<bool> {
        match self.array::<1>()?[0] {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Format(format!("invalid boolean byte {b}"))),
        }
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn vec(&mut self) -> Result<Vec<f64>> {
        let n = self.len(1 << 32)?;
        self.f64s(n)
    }

    pub fn string(&mut self) -> Result<String> {
        let n = self.len(1 << 24)?;
        String::from_utf8(self.bytes(n)?).map_err(|_| Error::Format("string is not UTF-8".into()))
    }

    pub fn matrix(&mut self) -> Result<DenseMatrix> {
        let rows = self.len(1 << 32)?;
        let cols = self.len(1 << 32)?;
        let data = self.f64s(rows * cols)?;
        DenseMatrix::from_row_major(rows, cols, data)
    }

    /// Fails unless the stream is exhausted.
    pub fn finish(mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(Error::Format("trailing bytes after payload".into())),
        }
    }
}

pub fn expect_magic<R: Read>(dec: &mut Decoder<R>, magic: &[u8; 8], what: &str) -> Result<()> {
    let got = dec.bytes(8)?;
    if got != magic {
        return Err(Error::Format(format!("not a {what} file (bad magic)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitives_round_trip() {
        let mut enc = Encoder::new(Vec::new());
        enc.u32(7).unwrap();
        enc.f64(-0.0).unwrap();
        enc.vec(&[1.5, f64::MIN_POSITIVE]).unwrap();
        enc.string("héllo").unwrap();
        enc.bool(true).unwrap();
        let buf = enc.into_inner();
        let mut dec = Decoder::new(buf.as_slice());
        assert_eq!(dec.u32().unwrap(), 7);
        assert_eq!(dec.f64().unwrap().to_bits(), (-0.0f64).to_bits());
        assert_eq!(dec.vec().unwrap(), vec![1.5, f64::MIN_POSITIVE]);
        assert_eq!(dec.string().unwrap(), "héllo");
        assert!(dec.bool().unwrap());
        dec.finish().unwrap();
    }

    #[test]
    fn truncation_is_a_format_error() {
        let mut dec = Decoder::new(&[1u8, 2][..]);
        assert!(matches!(dec.u32(), Err(Error::Format(_))));
    }
}
