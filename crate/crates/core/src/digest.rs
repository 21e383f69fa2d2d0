//! Canonical byte encoding and stable 64-bit hashing.
//!
//! Local-state digests and global-state keys must be identical across runs,
//! platforms, and dependency upgrades, so hashing is a fixed FNV-1a rather
//! than the standard library's seeded hasher.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Append-only canonical encoder. All multi-byte integers are written
/// little-endian so encodings compare equal exactly when the encoded states
/// are equal.
#[derive(Debug, Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_tag(&mut self, tag: u8) {
        self.buf.push(tag);
    }

    pub fn put_bool(&mut self, b: bool) {
        self.buf.push(u8::from(b));
    }

    pub fn put_u64(&mut self, x: u64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn put_usize(&mut self, x: usize) {
        self.put_u64(x as u64);
    }

    pub fn put_u64s(&mut self, xs: &[u64]) {
        self.put_usize(xs.len());
        for &x in xs {
            self.put_u64(x);
        }
    }

    pub fn put_bools(&mut self, xs: &[bool]) {
        self.put_usize(xs.len());
        for &x in xs {
            self.put_bool(x);
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn digest(&self) -> u64 {
        fnv1a64(&self.buf)
    }
}
