//! Little-endian primitives for the binary file formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) struct LeWriter<W>(pub W);

impl<W: Write> LeWriter<W> {
    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.0.write_all(b)?;
        Ok(())
    }
    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }
    pub fn u16(&mut self, v: u16) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn f32(&mut self, v: f32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        vs.iter().try_for_each(|&v| self.f64(v))
    }
    pub fn flush(&mut self) -> Result<()> {
        self.0.flush()?;
        Ok(())
    }
}

pub(crate) struct LeReader<R> {
    inner: R,
    what: &'static str,
}

impl<R: Read> LeReader<R> {
    pub fn new(inner: R, what: &'static str) -> Self {
        Self { inner, what }
    }

    pub fn bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::format(self.what, "truncated"),
            _ => Error::Io(e),
        })
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.bytes(&mut buf)?;
        Ok(buf)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }
    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn string(&mut self, len: usize) -> Result<String> {
        let mut buf = vec![0u8; len];
        self.bytes(&mut buf)?;
        String::from_utf8(buf).map_err(|_| Error::format(self.what, "id is not UTF-8"))
    }

    /// Succeeds only if the stream is exhausted.
    pub fn finish(mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(Error::format(self.what, "trailing bytes")),
        }
    }
}
