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

//! Orthonormal fast Walsh-Hadamard transform in Sylvester order, and the
//! randomized rotation `H * D(x)`.

use crate::error::{Error, Result};
use crate::tape::SignTape;

/// A vector zero-padded to a power-of-two length.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedVector {
    data: Vec<f64>,
    logical_len: usize,
}

impl PaddedVector {
    /// Pads `v` with zeros to the next power of two.
    pub fn new(v: &[f64]) -> Self {
        let n_pad = v.len().max(1).next_power_of_two();
        Self::with_len(v, n_pad).expect("padded length covers input")
    }

    /// Pads `v` with zeros to exactly `n_pad`, which must be a power of two
    /// no smaller than `v.len()`.
    pub fn with_len(v: &[f64], n_pad: usize) -> Result<Self> {
        if !n_pad.is_power_of_two() {
            return Err(Error::NonPowerOfTwoLength { got: n_pad });
        }
        if v.len() > n_pad {
            return Err(Error::LengthMismatch {
                expected: n_pad,
                got: v.len(),
            });
        }
        let mut data = vec![0.0; n_pad];
        data[..v.len()].copy_from_slice(v);
        Ok(Self {
            data,
            logical_len: v.len(),
        })
    }

    /// Wraps a full-length buffer; `data.len()` must be a power of two.
    pub fn from_full(data: Vec<f64>) -> Result<Self> {
        if !data.len().is_power_of_two() {
            return Err(Error::NonPowerOfTwoLength { got: data.len() });
        }
        let logical_len = data.len();
        Ok(Self { data, logical_len })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn logical_len(&self) -> usize {
        self.logical_len
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// In-place orthonormal transform. Returns the number of floating-point
/// operations performed (adds, subtracts and the final scaling multiplies).
pub fn fwht_in_place(data: &mut [f64]) -> Result<u64> {
    let n = data.len();
    if !n.is_power_of_two() {
        return Err(Error::NonPowerOfTwoLength { got: n });
    }
    transform_unscaled(data);
    let mut ops = n as u64 * n.trailing_zeros() as u64;
    if n > 1 {
        let scale = 1.0 / (n as f64).sqrt();
        data.iter_mut().for_each(|x| *x *= scale);
        ops += n as u64;
    }
    Ok(ops)
}

/// Lengths up to this stay in L1 and are transformed level by level.
const BASE_LEN: usize = 1 << 11;

/// Unnormalized transform. Longer inputs transform their quarters first and
/// then apply the top two levels in one pass, so each pass over memory that
/// does not fit in cache does two levels of work.
fn transform_unscaled(data: &mut [f64]) {
    let n = data.len();
    if n <= BASE_LEN {
        let mut h = 1;
        while h < n {
            for block in data.chunks_exact_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = x + y;
                    *b = x - y;
                }
            }
            h *= 2;
        }
        return;
    }
    let q = n / 4;
    data.chunks_exact_mut(q).for_each(transform_unscaled);
    let (a, rest) = data.split_at_mut(q);
    let (b, rest) = rest.split_at_mut(q);
    let (c, d) = rest.split_at_mut(q);
    for (((a, b), c), d) in a.iter_mut().zip(b).zip(c).zip(d) {
        let (s0, d0) = (*a + *b, *a - *b);
        let (s1, d1) = (*c + *d, *c - *d);
        *a = s0 + s1;
        *b = d0 + d1;
        *c = s0 - s1;
        *d = d0 - d1;
    }
}

pub fn fwht(v: &PaddedVector) -> Result<PaddedVector> {
    let mut out = v.clone();
    fwht_in_place(&mut out.data)?;
    Ok(out)
}

/// Computes `H * D(x) * v` where `D(x)` carries the first `v.len()` signs.
pub fn regularize(v: &PaddedVector, signs: &SignTape) -> Result<PaddedVector> {
    let mut out = v.clone();
    regularize_in_place(&mut out.data, signs)?;
    Ok(out)
}

pub(crate) fn regularize_in_place(data: &mut [f64], signs: &SignTape) -> Result<u64> {
    let n = data.len() as u64;
    if signs.domain_size() < n {
        return Err(Error::SignDomainTooSmall {
            domain: signs.domain_size(),
            needed: n,
        });
    }
    let mut x = vec![0.0; data.len()];
    signs.signs_into(0, &mut x);
    for (v, s) in data.iter_mut().zip(&x) {
        *v *= s;
    }
    fwht_in_place(data)
}

/// `(H_n)_{ab} = (-1)^{popcount(a & b)} / sqrt(n)` in Sylvester order.
#[inline]
pub fn hadamard_entry(n: usize, a: usize, b: usize) -> f64 {
    let s = if (a & b).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    s / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BinaryField;
    use proptest::prelude::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn two_point() {
        let out = fwht(&PaddedVector::new(&[1.0, 0.0])).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((out.as_slice()[0] - r).abs() < 1e-15);
        assert!((out.as_slice()[1] - r).abs() < 1e-15);
    }

    #[test]
    fn all_ones_four() {
        let out = fwht(&PaddedVector::new(&[1.0; 4])).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut v = vec![1.0; 6];
        assert_eq!(fwht_in_place(&mut v), Err(Error::NonPowerOfTwoLength { got: 6 }));
        assert!(PaddedVector::with_len(&[1.0; 3], 6).is_err());
    }

    #[test]
    fn padding_rounds_up() {
        let p = PaddedVector::new(&[1.0, 2.0, 3.0]);
        assert_eq!(p.as_slice(), &[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(p.logical_len(), 3);
    }

    #[test]
    fn matches_dense_hadamard() {
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let out = fwht(&PaddedVector::new(&v)).unwrap();
        for a in 0..16 {
            let dense: f64 = (0..16).map(|b| hadamard_entry(16, a, b) * v[b]).sum();
            assert!((dense - out.as_slice()[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_vector_spreads_evenly() {
        let f = BinaryField::new(4).unwrap();
        let signs = SignTape::new(f, vec![7, 3, 11, 2], 16).unwrap();
        for j in 0..16 {
            let mut e = vec![0.0; 16];
            e[j] = 1.0;
            let out = regularize(&PaddedVector::new(&e), &signs).unwrap();
            for x in out.as_slice() {
                assert!((x.abs() - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn plus_signs_reduce_to_fwht() {
        let f = BinaryField::new(3).unwrap();
        let signs = SignTape::new(f, vec![0, 0], 8).unwrap();
        let v = PaddedVector::new(&[0.5, -1.0, 2.0, 0.0, 3.0, 1.5, -0.25, 4.0]);
        assert_eq!(regularize(&v, &signs).unwrap(), fwht(&v).unwrap());
    }

    #[test]
    fn regularize_matches_dense_product() {
        let f = BinaryField::new(3).unwrap();
        let signs = SignTape::new(f, vec![5, 2, 6, 1], 8).unwrap();
        let x = signs.sign_vector();
        let v: Vec<f64> = (0..8).map(|i| ((i * i) as f64 * 0.71).cos()).collect();
        let out = regularize(&PaddedVector::new(&v), &signs).unwrap();
        for a in 0..8 {
            let dense: f64 = (0..8).map(|b| hadamard_entry(8, a, b) * x[b] as f64 * v[b]).sum();
            assert!((dense - out.as_slice()[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn small_sign_domain_rejected() {
        let f = BinaryField::new(2).unwrap();
        let signs = SignTape::new(f, vec![1], 4).unwrap();
        assert!(matches!(
            regularize(&PaddedVector::new(&[0.0; 8]), &signs),
            Err(Error::SignDomainTooSmall { .. })
        ));
    }

    #[test]
    fn blocked_transform_matches_level_by_level() {
        // Sizes past the in-cache base, with both parities of extra levels.
        for lg in [12u32, 13, 14, 15] {
            let n = 1usize << lg;
            let v: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1009) as f64 - 504.0).collect();
            let mut reference = v.clone();
            let mut h = 1;
            while h < n {
                for block in reference.chunks_exact_mut(2 * h) {
                    let (lo, hi) = block.split_at_mut(h);
                    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                        (*a, *b) = (*a + *b, *a - *b);
                    }
                }
                h *= 2;
            }
            let mut fast = v;
            transform_unscaled(&mut fast);
            // Integer inputs keep every partial sum exact.
            assert_eq!(fast, reference, "n = 2^{lg}");
        }
    }

    #[test]
    fn op_count_is_n_log_n() {
        for log_n in 1..=12 {
            let n = 1usize << log_n;
            let mut v = vec![1.0; n];
            let ops = fwht_in_place(&mut v).unwrap();
            assert_eq!(ops, (n * log_n + n) as u64);
        }
    }

    proptest! {
        #[test]
        fn involution_and_isometry(v in prop::collection::vec(-1e3f64..1e3, 1..300)) {
            let p = PaddedVector::new(&v);
            let once = fwht(&p).unwrap();
            let twice = fwht(&once).unwrap();
            let n0 = norm(p.as_slice());
            prop_assert!((norm(once.as_slice()) - n0).abs() <= 1e-12 * n0.max(1e-300));
            for (a, b) in twice.as_slice().iter().zip(p.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * n0.max(1.0));
            }
        }

        #[test]
        fn regularize_is_isometry(v in prop::collection::vec(-10f64..10.0, 1..128), seed in any::<u64>()) {
            let p = PaddedVector::new(&v);
            let n = p.len() as u64;
            let f = BinaryField::covering(n).unwrap();
            let coeffs = (0..4).map(|i| seed.rotate_left(i * 16) & f.mask()).collect();
            let signs = SignTape::new(f, coeffs, n).unwrap();
            let out = regularize(&p, &signs).unwrap();
            let n0 = norm(p.as_slice());
            prop_assert!((norm(out.as_slice()) - n0).abs() <= 1e-12 * n0.max(1e-300));
        }
    }
}
