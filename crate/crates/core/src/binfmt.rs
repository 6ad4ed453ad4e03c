//! Little-endian helpers shared by the binary containers.

use crate::error::{Error, Result};

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u32) -> Writer {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&version.to_le_bytes());
        Writer { buf }
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    container: &'static str,
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks the magic and returns the reader positioned after the version.
    pub fn open(
        container: &'static str,
        magic: &[u8; 4],
        supported: u32,
        data: &'a [u8],
    ) -> Result<Reader<'a>> {
        let mut r = Reader {
            container,
            data,
            pos: 0,
        };
        if r.take(4)? != magic {
            return Err(r.err("bad magic bytes"));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != supported {
            return Err(r.err(format!("unsupported version {version}")));
        }
        Ok(r)
    }

    pub fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.container, msg)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| self.err(format!("truncated at byte {}", self.pos)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// A count of items of `item_size` bytes each that must still fit in the
    /// remaining input.
    pub fn count(&mut self, item_size: usize) -> Result<usize> {
        let c = self.u64()?;
        let remaining = (self.data.len() - self.pos) as u64;
        match c.checked_mul(item_size as u64) {
            Some(bytes) if bytes <= remaining => Ok(c as usize),
            _ => Err(self.err(format!("count {c} exceeds the remaining {remaining} bytes"))),
        }
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| self.err("length overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(self.err(format!("{} trailing bytes", self.data.len() - self.pos)));
        }
        Ok(())
    }
}
