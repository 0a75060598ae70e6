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

//! Arithmetic in binary extension fields GF(2^w), 1 <= w <= 64.
//!
//! Elements are stored in the polynomial basis: bit `i` of the integer is the
//! coefficient of `x^i`. Each degree uses one fixed irreducible modulus from
//! [`MODULUS_LOW`]: the lowest-weight irreducible (trinomial if one exists,
//! else pentanomial) with the lexicographically smallest middle exponents.

use crate::error::{Error, Result};

/// Low part of the modulus for each degree `w` (index `w - 1`); the full
/// modulus is `x^w + MODULUS_LOW[w - 1]`.
pub const MODULUS_LOW: [u64; 64] = [
    0x1, 0x3, 0x3, 0x3, 0x5, 0x3, 0x3, 0x1b, // 1..=8
    0x3, 0x9, 0x5, 0x9, 0x1b, 0x21, 0x3, 0x2b, // 9..=16
    0x9, 0x9, 0x27, 0x9, 0x5, 0x3, 0x21, 0x1b, // 17..=24
    0x9, 0x1b, 0x27, 0x3, 0x5, 0x3, 0x9, 0x8d, // 25..=32
    0x401, 0x81, 0x5, 0x201, 0x53, 0x63, 0x11, 0x39, // 33..=40
    0x9, 0x81, 0x59, 0x21, 0x1b, 0x3, 0x21, 0x2d, // 41..=48
    0x201, 0x1d, 0x4b, 0x9, 0x47, 0x201, 0x81, 0x95, // 49..=56
    0x11, 0x80001, 0x95, 0x3, 0x27, 0x20000001, 0x3, 0x1b, // 57..=64
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryField {
    degree: u32,
    taps: [u8; 5],
    tap_count: u8,
    /// Folding rounds that always suffice to reduce a product of two
    /// reduced elements.
    folds: u8,
}

impl BinaryField {
    pub fn new(degree: u32) -> Result<Self> {
        if !(1..=64).contains(&degree) {
            return Err(Error::UnsupportedField(degree));
        }
        let low = MODULUS_LOW[degree as usize - 1];
        let mut taps = [0u8; 5];
        let mut tap_count = 0u8;
        for bit in 0..64u8 {
            if low >> bit & 1 == 1 {
                taps[tap_count as usize] = bit;
                tap_count += 1;
            }
        }
        // Each round lowers the excess degree by at least `degree - max_tap`.
        let max_tap = taps[tap_count as usize - 1] as u32;
        let folds = (degree - 1).div_ceil(degree - max_tap) as u8;
        Ok(Self {
            degree,
            taps,
            tap_count,
            folds,
        })
    }

    /// Smallest field with at least `size` elements (never smaller than GF(2)).
    pub fn covering(size: u64) -> Result<Self> {
        Self::new(bits_to_cover(size))
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Number of elements, `2^degree`.
    pub fn order(&self) -> u128 {
        1u128 << self.degree
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        if self.degree == 64 {
            u64::MAX
        } else {
            (1u64 << self.degree) - 1
        }
    }

    pub fn modulus_low(&self) -> u64 {
        MODULUS_LOW[self.degree as usize - 1]
    }

    #[inline]
    fn reduce(&self, mut product: u128) -> u64 {
        if self.degree <= 32 {
            return self.reduce_narrow(product as u64);
        }
        let w = self.degree;
        let mask = self.mask() as u128;
        for _ in 0..self.folds {
            let high = product >> w;
            let mut folded = product & mask;
            for &tap in &self.taps[..self.tap_count as usize] {
                folded ^= high << tap;
            }
            product = folded;
        }
        product as u64
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        #[cfg(target_arch = "x86_64")]
        if hardware_clmul() {
            // SAFETY: the instruction set extension was detected at runtime.
            return unsafe { self.mul_pclmul(a, b) };
        }
        self.reduce(clmul_portable(a, b))
    }

    /// `out[j] = eval_poly(coeffs, start + j)`. Eight points are evaluated
    /// together so their multiplies overlap.
    pub fn eval_poly_run(&self, coeffs: &[u64], start: u64, out: &mut [u64]) {
        let folds = FoldTable::new(self);
        #[cfg(target_arch = "x86_64")]
        if hardware_clmul() {
            // SAFETY: the instruction set extension was detected at runtime.
            return unsafe { self.eval_poly_run_pclmul(&folds, coeffs, start, out) };
        }
        self.eval_poly_run_with(coeffs, start, out, |a, b| folds.reduce(clmul_portable(a, b)))
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "pclmulqdq")]
    unsafe fn eval_poly_run_pclmul(&self, folds: &FoldTable, coeffs: &[u64], start: u64, out: &mut [u64]) {
        self.eval_poly_run_with(coeffs, start, out, |a, b| folds.reduce(clmul_pclmul(a, b)))
    }

    /// Product using the carry-less multiply instruction. For a trinomial
    /// modulus two shifts per fold are cheapest; otherwise each fold
    /// multiplies the overflow by the modulus's low part.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "pclmulqdq")]
    fn mul_pclmul(&self, a: u64, b: u64) -> u64 {
        if self.tap_count <= 2 {
            return self.reduce(clmul_pclmul(a, b));
        }
        let w = self.degree;
        let low = self.modulus_low();
        let mask = self.mask() as u128;
        let mut p = clmul_pclmul(a, b);
        for _ in 0..self.folds {
            p = (p & mask) ^ clmul_pclmul((p >> w) as u64, low);
        }
        p as u64
    }

    #[inline(always)]
    fn eval_poly_run_with(&self, coeffs: &[u64], start: u64, out: &mut [u64], mul: impl Fn(u64, u64) -> u64) {
        const LANES: usize = 8;
        let Some((&top, rest)) = coeffs.split_last() else {
            out.iter_mut().for_each(|o| *o = 0);
            return;
        };
        let mut x = start;
        let mut chunks = out.chunks_exact_mut(LANES);
        for chunk in &mut chunks {
            let xs: [u64; LANES] = std::array::from_fn(|l| x + l as u64);
            let mut acc = [top; LANES];
            for &c in rest.iter().rev() {
                for (a, &xl) in acc.iter_mut().zip(&xs) {
                    *a = mul(*a, xl) ^ c;
                }
            }
            chunk.copy_from_slice(&acc);
            x += LANES as u64;
        }
        for (j, o) in chunks.into_remainder().iter_mut().enumerate() {
            *o = self.eval_poly(coeffs, x + j as u64);
        }
    }

    /// Evaluates `sum_i coeffs[i] * x^i` by Horner's rule.
    #[inline]
    pub fn eval_poly(&self, coeffs: &[u64], x: u64) -> u64 {
        let Some((&top, rest)) = coeffs.split_last() else {
            return 0;
        };
        #[cfg(target_arch = "x86_64")]
        if hardware_clmul() {
            // SAFETY: the instruction set extension was detected at runtime.
            return unsafe { self.horner_pclmul(top, rest, x) };
        }
        if self.degree <= 32 {
            let window = Window::new(x);
            rest.iter().rev().fold(top, |acc, &c| {
                self.reduce_narrow(window.mul(acc, self.degree)) ^ c
            })
        } else {
            rest.iter().rev().fold(top, |acc, &c| self.mul(acc, x) ^ c)
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "pclmulqdq")]
    fn horner_pclmul(&self, top: u64, rest: &[u64], x: u64) -> u64 {
        rest.iter().rev().fold(top, |acc, &c| self.mul_pclmul(acc, x) ^ c)
    }

    #[inline]
    fn reduce_narrow(&self, mut product: u64) -> u64 {
        let w = self.degree;
        let mask = self.mask();
        for _ in 0..self.folds {
            let high = product >> w;
            let mut folded = product & mask;
            for &tap in &self.taps[..self.tap_count as usize] {
                folded ^= high << tap;
            }
            product = folded;
        }
        product
    }
}

/// Nibble table of `x * i` for `i < 16`, used for repeated products by a
/// fixed element in fields of degree at most 32.
struct Window([u64; 16]);

impl Window {
    #[inline]
    fn new(x: u64) -> Self {
        let mut t = [0u64; 16];
        t[1] = x;
        t[2] = x << 1;
        t[4] = x << 2;
        t[8] = x << 3;
        for i in 3..16usize {
            if !i.is_power_of_two() {
                let low = i & i.wrapping_neg();
                t[i] = t[low] ^ t[i ^ low];
            }
        }
        Window(t)
    }

    #[inline]
    fn mul(&self, a: u64, degree: u32) -> u64 {
        let mut r = 0u64;
        let mut shift = degree.div_ceil(4) * 4;
        while shift > 0 {
            shift -= 4;
            r = (r << 4) ^ self.0[(a >> shift & 0xf) as usize];
        }
        r
    }
}

/// Reduction by table: the overflow above bit `w` is cut into bytes, and
/// `bytes[j][v]` is `v * x^(w + 8j)` reduced. Reduction is linear, so the
/// lookups are independent of each other.
struct FoldTable {
    w: u32,
    mask: u64,
    bytes: Vec<[u64; 256]>,
}

impl FoldTable {
    fn new(field: &BinaryField) -> Self {
        let w = field.degree();
        let mut bytes = vec![[0u64; 256]; (w as usize - 1).div_ceil(8)];
        // x^w = modulus_low (mod P), then multiply by x one bit at a time.
        let mut z = field.modulus_low();
        for table in bytes.iter_mut() {
            for bit in 0..8 {
                table[1 << bit] = z;
                let carry = z >> (w - 1) & 1 == 1;
                z = (z << 1) & field.mask();
                if carry {
                    z ^= field.modulus_low();
                }
            }
            for v in 1..256usize {
                table[v] = table[v & (v - 1)] ^ table[v & v.wrapping_neg()];
            }
        }
        Self {
            w,
            mask: field.mask(),
            bytes,
        }
    }

    /// Reduces a product of two reduced elements.
    #[inline(always)]
    fn reduce(&self, product: u128) -> u64 {
        let mut r = product as u64 & self.mask;
        let mut high = (product >> self.w) as u64;
        for table in &self.bytes {
            r ^= table[(high & 0xff) as usize];
            high >>= 8;
        }
        r
    }
}

#[inline]
fn hardware_clmul() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("pclmulqdq")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// Carry-less (GF(2)[x]) product.
pub fn clmul(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if hardware_clmul() {
            // SAFETY: the instruction set extension was detected at runtime.
            return unsafe { clmul_pclmul(a, b) };
        }
    }
    clmul_portable(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq")]
fn clmul_pclmul(a: u64, b: u64) -> u128 {
    use std::arch::x86_64::{__m128i, _mm_clmulepi64_si128, _mm_cvtsi64_si128};
    let r = _mm_clmulepi64_si128(_mm_cvtsi64_si128(a as i64), _mm_cvtsi64_si128(b as i64), 0);
    // SAFETY: both types are 128 bits of plain data.
    unsafe { std::mem::transmute::<__m128i, u128>(r) }
}

fn clmul_portable(a: u64, b: u64) -> u128 {
    let a = a as u128;
    let mut b = b;
    let mut r = 0u128;
    while b != 0 {
        let bit = b.trailing_zeros();
        r ^= a << bit;
        b &= b - 1;
    }
    r
}

/// Smallest `w >= 1` with `2^w >= size`.
pub fn bits_to_cover(size: u64) -> u32 {
    if size <= 2 {
        1
    } else {
        64 - (size - 1).leading_zeros()
    }
}
