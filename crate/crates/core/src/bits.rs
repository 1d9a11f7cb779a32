//! Packed binary strings.
//!
//! [`Bits`] is the value type of the machine stack, the key type of complexity
//! tables and the element type of every model. Bits are stored most
//! significant first in 64-bit words, so comparing words in order compares the
//! strings lexicographically. Strings of up to 128 bits live inline.
//!
//! The total order is the canonical (length, lexicographic) order:
//! `ε < 0 < 1 < 00 < 01 < 10 < 11 < 000 < ...`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;
use thiserror::Error;

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A finite binary string.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid bit string {input:?}: expected only '0' and '1' (or 'ε' / '-' for the empty string)")]
pub struct ParseBitsError {
    pub input: String,
}

impl Bits {
    /// The empty string ε.
    pub fn new() -> Self {
        Bits {
            len: 0,
            words: SmallVec::new(),
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Bits {
            len: 0,
            words: SmallVec::with_capacity(words_for(bits)),
        }
    }

    /// `len` copies of `bit`.
    pub fn filled(bit: bool, len: usize) -> Self {
        let mut out = Bits::with_capacity(len);
        for _ in 0..len {
            out.push(bit);
        }
        out
    }

    /// The `len`-bit big-endian numeral of `value` (the low `len` bits).
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        if len == 0 {
            return Bits::new();
        }
        let shifted = if len == 64 {
            value
        } else {
            (value & ((1u64 << len) - 1)) << (WORD - len)
        };
        let mut words = SmallVec::new();
        words.push(shifted);
        Bits { len, words }
    }

    /// Big-endian value of the string; `None` if longer than 128 bits.
    pub fn to_u128(&self) -> Option<u128> {
        if self.len > 128 {
            return None;
        }
        let mut v: u128 = 0;
        for b in self.iter() {
            v = (v << 1) | b as u128;
        }
        Some(v)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        let off = self.len % WORD;
        if off == 0 {
            self.words.push(0);
        }
        if bit {
            let last = self.words.len() - 1;
            self.words[last] |= 1u64 << (WORD - 1 - off);
        }
        self.len += 1;
    }

    /// Appends `other` to `self`.
    pub fn extend_from(&mut self, other: &Bits) {
        if other.len == 0 {
            return;
        }
        let shift = self.len % WORD;
        if shift == 0 {
            self.words.extend_from_slice(&other.words);
        } else {
            let base = self.words.len() - 1;
            for (i, &w) in other.words.iter().enumerate() {
                self.words[base + i] |= w >> shift;
                self.words.push(w << (WORD - shift));
            }
        }
        self.len += other.len;
        self.words.truncate(words_for(self.len));
    }

    /// `self · other`.
    pub fn concat(&self, other: &Bits) -> Bits {
        let mut out = Bits::with_capacity(self.len + other.len);
        out.extend_from(self);
        out.extend_from(other);
        out
    }

    /// `self` repeated `n` times.
    pub fn repeat(&self, n: usize) -> Bits {
        let mut out = Bits::with_capacity(self.len * n);
        for _ in 0..n {
            out.extend_from(self);
        }
        out
    }

    /// The substring `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len, "slice out of range");
        if start % WORD == 0 {
            let first = start / WORD;
            let mut words: SmallVec<[u64; 2]> = SmallVec::from_slice(&self.words[first..first + words_for(len)]);
            let tail = len % WORD;
            if tail != 0 {
                let last = words.len() - 1;
                words[last] &= !0u64 << (WORD - tail);
            }
            return Bits { len, words };
        }
        let mut out = Bits::with_capacity(len);
        for i in start..start + len {
            out.push(self.get(i));
        }
        out
    }

    /// The suffix starting at `start`.
    pub fn suffix(&self, start: usize) -> Bits {
        self.slice(start, self.len - start)
    }

    pub fn starts_with(&self, prefix: &Bits) -> bool {
        prefix.len <= self.len && self.slice(0, prefix.len) == *prefix
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Binary increment of a fixed-width numeral; `None` on overflow (all ones).
    pub fn increment(&self) -> Option<Bits> {
        let mut bits: Vec<bool> = self.iter().collect();
        for i in (0..bits.len()).rev() {
            if bits[i] {
                bits[i] = false;
            } else {
                bits[i] = true;
                return Some(bits.into_iter().collect());
            }
        }
        None
    }

    /// All `2^len` strings of length `len` in lexicographic order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = Bits> {
        assert!(len < 64, "cannot enumerate strings of length {len}");
        (0..(1u64 << len)).map(move |v| Bits::from_u64(v, len))
    }

    /// All strings of length at most `max_len` in canonical order.
    pub fn all_upto(max_len: usize) -> impl Iterator<Item = Bits> {
        (0..=max_len).flat_map(Bits::all_of_length)
    }

    /// Packed big-endian bytes (the final byte zero-padded).
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let w = self.words[i / 8];
            out.push((w >> (56 - 8 * (i % 8))) as u8);
        }
        out
    }

    /// Inverse of [`Bits::to_bytes`]; padding bits must be zero.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Bits> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut words: SmallVec<[u64; 2]> = SmallVec::from_elem(0, words_for(len));
        for (i, &b) in bytes.iter().enumerate() {
            words[i / 8] |= (b as u64) << (56 - 8 * (i % 8));
        }
        let out = Bits { len, words };
        let tail = len % WORD;
        if tail != 0 && out.words[out.words.len() - 1] & !(!0u64 << (WORD - tail)) != 0 {
            return None;
        }
        Some(out)
    }

    /// Renders ε as `ε` instead of the empty string.
    pub fn display_eps(&self) -> String {
        if self.is_empty() {
            "ε".to_string()
        } else {
            self.to_string()
        }
    }
}

impl Ord for Bits {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| self.words.cmp(&other.words))
    }
}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({})", self.display_eps())
    }
}

impl FromStr for Bits {
    type Err = ParseBitsError;

    /// Accepts `0`/`1` text; `ε`, `-` and the empty string denote ε.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "ε" || s == "-" {
            return Ok(Bits::new());
        }
        let mut out = Bits::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return Err(ParseBitsError { input: s.to_string() }),
            }
        }
        Ok(out)
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut out = Bits::new();
        for b in iter {
            out.push(b);
        }
        out
    }
}

/// Parses a bit-string literal, panicking on bad input. Intended for tests and constants.
pub fn bits(s: &str) -> Bits {
    s.parse().expect("valid bit-string literal")
}
