//! Typed message buffers: the substrate for data handles, migration and
//! the backup stream format.
//!
//! All fields are little-endian and 64 bits wide (integers as `u64`/`i64`,
//! reals as IEEE binary64). Consume order must equal append order; reading
//! past the end is an error, not UB.

use crate::error::{GridError, Result};

/// Append-only byte buffer with typed writers.
#[derive(Debug, Default, Clone)]
pub struct MsgWriter {
    bytes: Vec<u8>,
}

impl MsgWriter {
    pub fn new() -> MsgWriter {
        MsgWriter::default()
    }

    pub fn put_u64(&mut self, v: u64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_i64(&mut self, v: i64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_f64(&mut self, v: f64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_u8(&mut self, v: u8) {
        self.bytes.push(v);
    }

    pub fn put_bytes(&mut self, v: &[u8]) {
        self.put_u64(v.len() as u64);
        self.bytes.extend_from_slice(v);
    }

    /// Append a nested buffer (length-prefixed).
    pub fn put_buffer(&mut self, v: &MsgWriter) {
        self.put_bytes(&v.bytes);
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// Cursor over a received byte buffer with typed readers.
#[derive(Debug)]
pub struct MsgReader {
    bytes: Vec<u8>,
    pos: usize,
}

impl MsgReader {
    pub fn new(bytes: Vec<u8>) -> MsgReader {
        MsgReader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(GridError::BufferExhausted(what));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn get_u64(&mut self) -> Result<u64> {
        let s = self.take(8, "u64")?;
        Ok(u64::from_le_bytes(s.try_into().unwrap()))
    }

    pub fn get_i64(&mut self) -> Result<i64> {
        let s = self.take(8, "i64")?;
        Ok(i64::from_le_bytes(s.try_into().unwrap()))
    }

    pub fn get_f64(&mut self) -> Result<f64> {
        let s = self.take(8, "f64")?;
        Ok(f64::from_le_bytes(s.try_into().unwrap()))
    }

    pub fn get_u8(&mut self) -> Result<u8> {
        Ok(self.take(1, "u8")?[0])
    }

    pub fn get_bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.get_u64()? as usize;
        Ok(self.take(n, "bytes")?.to_vec())
    }

    /// Read a nested buffer written by [`MsgWriter::put_buffer`].
    pub fn get_buffer(&mut self) -> Result<MsgReader> {
        Ok(MsgReader::new(self.get_bytes()?))
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_in_order() {
        let mut w = MsgWriter::new();
        w.put_u64(42);
        w.put_f64(-1.5);
        w.put_i64(-7);
        let mut nested = MsgWriter::new();
        nested.put_u64(99);
        w.put_buffer(&nested);
        let mut r = MsgReader::new(w.into_bytes());
        assert_eq!(r.get_u64().unwrap(), 42);
        assert_eq!(r.get_f64().unwrap(), -1.5);
        assert_eq!(r.get_i64().unwrap(), -7);
        let mut n = r.get_buffer().unwrap();
        assert_eq!(n.get_u64().unwrap(), 99);
        assert!(r.is_exhausted());
    }

    #[test]
    fn exhausted_read_is_an_error() {
        let mut r = MsgReader::new(vec![1, 2, 3]);
        assert!(matches!(
            r.get_u64(),
            Err(GridError::BufferExhausted("u64"))
        ));
    }

    #[test]
    fn layout_is_little_endian() {
        let mut w = MsgWriter::new();
        w.put_u64(1);
        assert_eq!(w.as_bytes(), &[1, 0, 0, 0, 0, 0, 0, 0]);
    }
}
