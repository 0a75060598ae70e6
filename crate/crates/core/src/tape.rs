// Copyright 2026 The djl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Seed tapes and k-wise independent sign generators.
//!
//! A [`SeedTape`] is the generator's seed `y` cut into disjoint slices, one
//! per pipeline component. Bits are read most-significant-first within each
//! byte. A [`SignTape`] interprets a slice as `k` coefficients of a
//! polynomial over GF(2^w); the sign at index `i` is the lowest bit of the
//! polynomial evaluated at the field element whose polynomial-basis
//! coordinates are the binary digits of `i` (0 maps to +1, 1 to -1).

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::BinaryField;
use crate::pipeline::JlPlan;

/// Packed bit string, most significant bit first within each byte.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            bytes: vec![0; len.div_ceil(8)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self {
            bytes: vec![0xff; len.div_ceil(8)],
            len,
        };
        b.clear_tail();
        b
    }

    /// Uses all `8 * bytes.len()` bits.
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let len = bytes.len() * 8;
        Self { bytes, len }
    }

    /// Keeps the first `len` bits of `bytes`; trailing bits are cleared.
    pub fn from_bytes_truncated(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if bytes.len() * 8 < len {
            return Err(Error::BitsTooShort {
                needed: len,
                got: bytes.len() * 8,
            });
        }
        let mut b = Self {
            bytes: bytes[..len.div_ceil(8)].to_vec(),
            len,
        };
        b.clear_tail();
        Ok(b)
    }

    pub fn from_hex(hex_str: &str) -> Result<Self> {
        let trimmed = hex_str.trim().trim_start_matches("0x");
        let bytes = hex::decode(trimmed).map_err(|e| Error::Malformed(format!("seed hex: {e}")))?;
        Ok(Self::from_bytes(bytes))
    }

    /// Builds a bit string from an integer, `len` bits, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        let mut b = Self::zeros(len);
        for i in 0..len {
            b.set(i, value >> (len - 1 - i) & 1 == 1);
        }
        b
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= 0xffu8 << (8 - rem);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len);
        let mask = 1u8 << (7 - i % 8);
        if bit {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    /// Reads `width <= 64` bits starting at `offset` as an unsigned integer.
    pub fn read_uint(&self, offset: usize, width: usize) -> u64 {
        assert!(width <= 64 && offset + width <= self.len);
        let mut v = 0u64;
        for i in offset..offset + width {
            v = (v << 1) | self.get(i) as u64;
        }
        v
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({} bits, {})", self.len, self.to_hex())
    }
}

/// Which pipeline component a seed slice belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Component {
    StageSigns { stage: usize },
    StageSampler { stage: usize },
    TailSigns,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::StageSigns { stage } => write!(f, "stage{stage}.signs"),
            Component::StageSampler { stage } => write!(f, "stage{stage}.sampler"),
            Component::TailSigns => write!(f, "tail.signs"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub component: Component,
    pub offset: usize,
    pub len: usize,
}

/// The seed cut into the plan's component slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedTape {
    bits: BitString,
    partition: Vec<Slice>,
}

impl SeedTape {
    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn partition(&self) -> &[Slice] {
        &self.partition
    }

    pub fn slice(&self, component: Component) -> Option<Slice> {
        self.partition.iter().copied().find(|s| s.component == component)
    }

    /// Sub-string of the bits belonging to `component`.
    pub fn slice_bits(&self, component: Component) -> Option<BitString> {
        let s = self.slice(component)?;
        let mut out = BitString::zeros(s.len);
        for i in 0..s.len {
            out.set(i, self.bits.get(s.offset + i));
        }
        Some(out)
    }

    /// Reads `count` consecutive `width`-bit words from the slice of `component`.
    pub fn read_words(&self, component: Component, width: usize, count: usize) -> Result<Vec<u64>> {
        let s = self
            .slice(component)
            .ok_or_else(|| Error::Malformed(format!("tape has no slice for {component}")))?;
        if width * count != s.len {
            return Err(Error::LengthMismatch {
                expected: s.len,
                got: width * count,
            });
        }
        Ok((0..count)
            .map(|i| self.bits.read_uint(s.offset + i * width, width))
            .collect())
    }
}

/// Cuts `bits` into the plan's slices in canonical order: for each stage `i`
/// the sign slice then the sampler slice, then the tail sign slice. Bits past
/// `plan.seed_length_bits` are ignored.
pub fn tape_partition(plan: &JlPlan, bits: &BitString) -> Result<SeedTape> {
    let needed = plan.seed_length_bits;
    if bits.len() < needed {
        return Err(Error::BitsTooShort {
            needed,
            got: bits.len(),
        });
    }
    let mut partition = Vec::new();
    let mut offset = 0;
    for (component, len) in plan.slice_schedule() {
        partition.push(Slice {
            component,
            offset,
            len,
        });
        offset += len;
    }
    debug_assert_eq!(offset, needed);
    let bits = BitString::from_bytes_truncated(bits.as_bytes().to_vec(), needed)?;
    Ok(SeedTape { bits, partition })
}

/// A k-wise independent ±1 vector of length `domain_size`.
#[derive(Debug, Clone)]
pub struct SignTape {
    field: BinaryField,
    coefficients: Vec<u64>,
    domain_size: u64,
    powers: OnceLock<Arc<Columns>>,
}

impl PartialEq for SignTape {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.coefficients == other.coefficients
            && self.domain_size == other.domain_size
    }
}

impl Eq for SignTape {}

impl SignTape {
    /// `coefficients[i]` multiplies `x^i`; the independence level is
    /// `coefficients.len()`.
    pub fn new(field: BinaryField, coefficients: Vec<u64>, domain_size: u64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidParams("sign tape needs k >= 1".into()));
        }
        if domain_size as u128 > field.order() {
            return Err(Error::SignDomainTooSmall {
                domain: field.order().min(u64::MAX as u128) as u64,
                needed: domain_size,
            });
        }
        if let Some(&c) = coefficients.iter().find(|&&c| c & !field.mask() != 0) {
            return Err(Error::Malformed(format!(
                "coefficient {c:#x} outside GF(2^{})",
                field.degree()
            )));
        }
        Ok(Self {
            field,
            coefficients,
            domain_size,
            powers: OnceLock::new(),
        })
    }

    /// Reads the tape's coefficients from the slice of `component`. The slice
    /// must hold exactly `k * w` bits where `w` is the covering field degree.
    pub fn from_seed(tape: &SeedTape, component: Component, k: usize, domain_size: u64) -> Result<Self> {
        let field = BinaryField::covering(domain_size)?;
        let coefficients = tape.read_words(component, field.degree() as usize, k)?;
        Self::new(field, coefficients, domain_size)
    }

    /// Seed cost of a `k`-wise tape over `domain_size` positions.
    pub fn seed_bits(k: usize, domain_size: u64) -> usize {
        k * crate::field::bits_to_cover(domain_size) as usize
    }

    pub fn field(&self) -> &BinaryField {
        &self.field
    }

    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn domain_size(&self) -> u64 {
        self.domain_size
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    /// Field element the polynomial takes at `index`, unchecked.
    #[inline]
    pub(crate) fn raw_at(&self, index: u64) -> u64 {
        self.field.eval_poly(&self.coefficients, index)
    }

    #[inline]
    pub(crate) fn sign_unchecked(&self, index: u64) -> f64 {
        if self.raw_at(index) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn sign_at(&self, index: u64) -> Result<i8> {
        if index >= self.domain_size {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.domain_size,
            });
        }
        Ok(if self.raw_at(index) & 1 == 0 { 1 } else { -1 })
    }

    pub fn sign_vector(&self) -> Vec<i8> {
        let mut out = vec![0.0; self.domain_size as usize];
        self.signs_into(0, &mut out);
        out.into_iter().map(|s| s as i8).collect()
    }

    /// Writes the signs of positions `start..start + out.len()` as ±1.0.
    ///
    /// Positions are processed in aligned blocks `B ^ y`, `y < 2^b`. Within a
    /// block the polynomial is shifted to `q(y) = p(B + y)` (the binomial
    /// coefficients are taken mod 2). The low bit of `d * z` is a linear
    /// functional of `z`, so the block's sign bits are the XOR of the bit
    /// columns `{bit j of y^i : y in block}` selected by those functionals.
    /// Squaring is linear in characteristic 2, so the functional on
    /// `y^(o 2^a)` folds into one on `y^o` and only odd powers need columns.
    pub fn signs_into(&self, start: u64, out: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the instruction set extension was detected at runtime.
            return unsafe { self.signs_into_avx2(start, out) };
        }
        self.signs_into_generic(start, out)
    }

    /// `sum_j sign(start + j) * v[j]`.
    pub fn signed_dot(&self, start: u64, v: &[f64]) -> f64 {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: as above.
            return unsafe { self.signed_dot_avx2(start, v) };
        }
        self.signed_dot_generic(start, v)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn signs_into_avx2(&self, start: u64, out: &mut [f64]) {
        self.signs_into_generic(start, out)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn signed_dot_avx2(&self, start: u64, v: &[f64]) -> f64 {
        self.signed_dot_generic(start, v)
    }

    #[inline(always)]
    fn signs_into_generic(&self, start: u64, out: &mut [f64]) {
        self.for_each_block(start, out.len(), |offset, bits, lo, hi| {
            let out = &mut out[offset..offset + hi - lo];
            for_each_word(bits, lo, hi - lo, |word, range| {
                for (t, x) in out[range].iter_mut().enumerate() {
                    *x = f64::from_bits(1f64.to_bits() ^ ((word >> t) & 1) << 63);
                }
            });
        });
    }

    #[inline(always)]
    fn signed_dot_generic(&self, start: u64, v: &[f64]) -> f64 {
        // Eight lanes keep the adds off one dependency chain and vectorize.
        let mut acc = [0.0f64; 8];
        self.for_each_block(start, v.len(), |offset, bits, lo, hi| {
            let chunk = &v[offset..offset + hi - lo];
            for_each_word(bits, lo, hi - lo, |word, range| {
                let xs = &chunk[range];
                if xs.len() == 64 {
                    for (g, pair) in xs.chunks_exact(8).enumerate() {
                        let byte = (word >> (8 * g)) as usize;
                        let (lo, hi) = (&SIGN_BITS[byte & 15], &SIGN_BITS[byte >> 4 & 15]);
                        for l in 0..4 {
                            acc[l] += f64::from_bits(pair[l].to_bits() ^ lo[l]);
                            acc[l + 4] += f64::from_bits(pair[l + 4].to_bits() ^ hi[l]);
                        }
                    }
                } else {
                    for (t, &x) in xs.iter().enumerate() {
                        acc[t % 8] += f64::from_bits(x.to_bits() ^ ((word >> t) & 1) << 63);
                    }
                }
            });
        });
        acc.chunks_exact(2).map(|p| p[0] + p[1]).sum()
    }

    /// Calls `f(offset, bits, lo, hi)` for each aligned block overlapping
    /// `start..start + len`, where bit `y` of `bits` is set iff position
    /// `block_base + y` has sign -1, `lo..hi` is the covered part of the
    /// block and `offset` its position relative to `start`.
    #[inline(always)]
    fn for_each_block(&self, start: u64, len: usize, mut f: impl FnMut(usize, &[u64], usize, usize)) {
        let end = start + len as u64;
        assert!(end <= self.domain_size, "sign range past domain");
        let k = self.k();
        let w = self.field.degree() as usize;
        let block_bits = self.field.degree().min(BLOCK_BITS);
        let block = 1u64 << block_bits;
        let words = (block as usize).div_ceil(64);
        let columns = self
            .powers
            .get_or_init(|| power_columns(self.field, k, block as usize));
        let mut masks = vec![0u64; k / 2];
        let mut bits = vec![0u64; words];
        let mut pos = start;
        while pos < end {
            let base = pos & !(block - 1);
            let stop = end.min(base + block);
            let flip = self.block_masks(base, &mut masks);
            let (lo, hi) = ((pos - base) as usize, (stop - base) as usize);
            // Only the words covering lo..hi are needed.
            let (w_lo, w_hi) = (lo / 64, hi.div_ceil(64));
            let fill = if flip { u64::MAX } else { 0 };
            bits[w_lo..w_hi].iter_mut().for_each(|b| *b = fill);
            for (slot, (&mask, &live)) in masks.iter().zip(&columns.nonzero).enumerate() {
                let mut m = mask & live;
                while m != 0 {
                    let j = m.trailing_zeros() as usize;
                    m &= m - 1;
                    let at = (slot * w + j) * words;
                    let col = &columns.table[at + w_lo..at + w_hi];
                    for (b, c) in bits[w_lo..w_hi].iter_mut().zip(col) {
                        *b ^= c;
                    }
                }
            }
            f((pos - start) as usize, &bits, lo, hi);
            pos = stop;
        }
    }

    /// Fills `masks[s]` with the functional applied to `y^(2s + 1)` for the
    /// block at `base`, and returns the constant term's sign bit.
    #[inline(always)]
    fn block_masks(&self, base: u64, masks: &mut [u64]) -> bool {
        let k = self.k();
        let mut base_pow = Vec::with_capacity(k);
        let mut p = 1u64;
        for _ in 0..k {
            base_pow.push(p);
            p = self.field.mul(p, base);
        }
        let rows = lowbit_rows(&self.field);
        let frob = frobenius_table(&self.field);
        masks.iter_mut().for_each(|m| *m = 0);
        let mut flip = false;
        for i in 0..k {
            // Coefficient of y^i in p(base + y); binom(l, i) is odd iff i's
            // bits are a subset of l's.
            let mut d = 0u64;
            for l in i..k {
                if i & !l == 0 {
                    d ^= self.field.mul(self.coefficients[l], base_pow[l - i]);
                }
            }
            if i == 0 {
                flip = d & 1 == 1;
                continue;
            }
            // Bit b of the functional is the low bit of d * x^b, linear in d.
            let mut m = 0u64;
            while d != 0 {
                m ^= rows[d.trailing_zeros() as usize];
                d &= d - 1;
            }
            let a = i.trailing_zeros() as usize;
            if a > 0 {
                // z -> m(z^(2^a)) as a functional of z.
                let images = &frob[a % frob.len()];
                let mut folded = 0u64;
                for (b, &img) in images.iter().enumerate().take(self.field.degree() as usize) {
                    folded |= ((m & img).count_ones() as u64 & 1) << b;
                }
                m = folded;
            }
            masks[(i >> a) / 2] ^= m;
        }
        flip
    }
}

/// `SIGN_BITS[n][l]` is the f64 sign bit when bit `l` of the nibble `n` is set.
static SIGN_BITS: [[u64; 4]; 16] = {
    let mut t = [[0u64; 4]; 16];
    let mut n = 0;
    while n < 16 {
        let mut l = 0;
        while l < 4 {
            t[n][l] = ((n as u64 >> l) & 1) << 63;
            l += 1;
        }
        n += 1;
    }
    t
};

/// Cuts positions `lo..lo + len` of a block at 64-bit word boundaries and
/// calls `f(word, range)`, where `range` indexes the covered positions
/// (relative to `lo`) and bit `t` of `word` belongs to `range.start + t`.
#[inline(always)]
fn for_each_word(bits: &[u64], lo: usize, len: usize, mut f: impl FnMut(u64, Range<usize>)) {
    let mut done = 0;
    while done < len {
        let y = lo + done;
        let take = (64 - y % 64).min(len - done);
        f(bits[y / 64] >> (y % 64), done..done + take);
        done += take;
    }
}

/// `rows[i]` has bit `b` set iff `x^(i + b)` has low bit 1, for `i, b < w`.
fn lowbit_rows(field: &BinaryField) -> [u64; 64] {
    let w = field.degree();
    let top = 1u64 << (w - 1);
    let mut seq = 0u128;
    let mut z = 1u64;
    for j in 0..2 * w {
        seq |= ((z & 1) as u128) << j;
        let carry = z & top != 0;
        z = (z << 1) & field.mask();
        if carry {
            z ^= field.modulus_low();
        }
    }
    let mut rows = [0u64; 64];
    for (i, row) in rows.iter_mut().enumerate().take(w as usize) {
        *row = (seq >> i) as u64 & field.mask();
    }
    rows
}

const BLOCK_BITS: u32 = 14;

type ColumnKey = (u32, usize, usize);

/// Bit-sliced odd powers: column `(s, j)` of `table` holds bit `j` of
/// `y^(2s + 1)` at bit position `y`, for `y < count`. `nonzero[s]` marks the
/// columns that are not identically zero.
#[derive(Debug)]
struct Columns {
    table: Vec<u64>,
    nonzero: Vec<u64>,
}

/// Tables depend only on the field, `k` and the block size, so they are
/// shared process-wide.
fn power_columns(field: BinaryField, k: usize, count: usize) -> Arc<Columns> {
    static CACHE: OnceLock<Mutex<HashMap<ColumnKey, Arc<Columns>>>> = OnceLock::new();
    let key = (field.degree(), k, count);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("column cache").get(&key) {
        return Arc::clone(t);
    }
    let w = field.degree() as usize;
    let words = count.div_ceil(64);
    let mut table = vec![0u64; k / 2 * w * words];
    let mut nonzero = vec![0u64; k / 2];
    for y in 0..count {
        let square = field.mul(y as u64, y as u64);
        let mut p = y as u64;
        for (slot, live) in nonzero.iter_mut().enumerate() {
            *live |= p;
            let mut bits = p;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                table[(slot * w + j) * words + y / 64] |= 1 << (y % 64);
            }
            p = field.mul(p, square);
        }
    }
    let columns = Arc::new(Columns { table, nonzero });
    cache
        .lock()
        .expect("column cache")
        .insert(key, Arc::clone(&columns));
    columns
}

/// `table[a][b]` is `(x^b)^(2^a)` for `a, b < w`.
fn frobenius_table(field: &BinaryField) -> Arc<Vec<[u64; 64]>> {
    type Tables = HashMap<u32, Arc<Vec<[u64; 64]>>>;
    static CACHE: OnceLock<Mutex<Tables>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let w = field.degree();
    if let Some(t) = cache.lock().expect("frobenius cache").get(&w) {
        return Arc::clone(t);
    }
    let mut table = vec![[0u64; 64]; w as usize];
    let mut x_b = 1u64;
    for b in 0..w as usize {
        let mut z = x_b;
        for level in table.iter_mut() {
            level[b] = z;
            z = field.mul(z, z);
        }
        let carry = x_b >> (w - 1) & 1 == 1;
        x_b = (x_b << 1) & field.mask();
        if carry {
            x_b ^= field.modulus_low();
        }
    }
    let table = Arc::new(table);
    cache
        .lock()
        .expect("frobenius cache")
        .insert(w, Arc::clone(&table));
    table
}
