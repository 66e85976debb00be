//! Hashcode layout: 5 bits per level over a 32-bit hashcode.

use std::hash::{BuildHasher, Hasher};

/// Bits of hashcode consumed per trie level.
pub const BRANCH_WIDTH: u32 = 5;
/// Width of a hashcode in bits.
pub const HASH_WIDTH: u32 = 32;
/// Deepest level (as a bit offset) that still has hash bits left. The chunk at
/// this level only carries the remaining 2 bits.
pub const MAX_LEVEL: u32 = 30;

const CHUNK_MASK: u32 = (1 << BRANCH_WIDTH) - 1;

/// The `BRANCH_WIDTH`-bit chunk of `hc` that selects a branch at `lev`.
///
/// `lev` is a bit offset and must not exceed [`MAX_LEVEL`].
#[inline]
pub fn chunk(hc: u32, lev: u32) -> u32 {
    debug_assert!(lev <= MAX_LEVEL, "level {lev} has no hash bits left");
    (hc >> lev) & CHUNK_MASK
}

/// One-hot bitmap flag for `hc` at `lev`, and the dense array position that
/// flag maps to in a node with bitmap `bmp`.
#[inline]
pub fn flagpos(hc: u32, lev: u32, bmp: u32) -> (u32, usize) {
    let flag = 1u32 << chunk(hc, lev);
    let pos = (flag.wrapping_sub(1) & bmp).count_ones() as usize;
    (flag, pos)
}

/// Folds a 64-bit `Hasher` result into the 32-bit hashcode the trie uses.
#[inline]
pub(crate) fn fold(h: u64) -> u32 {
    (h ^ (h >> 32)) as u32
}

/// Passes an integer key through unchanged, so a `u32` key is its own
/// hashcode. Lets tests and the demo place keys at chosen trie positions.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityHash;

#[derive(Debug, Default)]
pub struct IdentityHasher(u64);

impl BuildHasher for IdentityHash {
    type Hasher = IdentityHasher;

    fn build_hasher(&self) -> IdentityHasher {
        IdentityHasher(0)
    }
}

impl Hasher for IdentityHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 << 8) | u64::from(b);
        }
    }

    fn write_u32(&mut self, n: u32) {
        self.0 = u64::from(n);
    }

    fn write_u64(&mut self, n: u64) {
        self.0 = n;
    }
}

/// Avalanche mix of integer keys (the murmur3 64-bit finalizer). Fixed
/// constants keep benchmark and fuzz runs reproducible across processes.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mix64;

#[derive(Debug, Default)]
pub struct Mix64Hasher(u64);

pub fn fmix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    h
}

impl BuildHasher for Mix64 {
    type Hasher = Mix64Hasher;

    fn build_hasher(&self) -> Mix64Hasher {
        Mix64Hasher(0)
    }
}

impl Hasher for Mix64Hasher {
    fn finish(&self) -> u64 {
        fmix64(self.0)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ u64::from(b);
        }
    }

    fn write_u64(&mut self, n: u64) {
        self.0 ^= n;
    }
}
