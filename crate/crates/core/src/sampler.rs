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

//! Explicit averaging samplers.
//!
//! A member of the family is the evaluation sequence `(p(0), ..., p(s-1))` of
//! a polynomial `p` of degree below `k` over GF(2^w), where `2^w` is the
//! (power-of-two) domain size. Members are selected by the `k * w` bit
//! index holding the coefficients, so the slots of a uniform member are
//! k-wise independent and each slot is exactly uniform on the domain.
//! Members are sequences: repeated elements are kept and weighted per slot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::BinaryField;
use crate::tape::BitString;

/// Largest index width that `sampler_audit` will enumerate.
pub const ENUMERATION_CAP_BITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConstants {
    /// Multiplier in `s = c_samp * B^2 * ln(1/delta) / eps^2`.
    pub c_samp: f64,
    /// Multiplier in the independence level `k = c_k * ln(1/delta)`.
    pub c_k: f64,
}

impl Default for SamplerConstants {
    fn default() -> Self {
        Self {
            c_samp: 2.0,
            c_k: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFamily {
    /// Domain size; always a power of two.
    pub n: usize,
    pub s: usize,
    pub range_bound: f64,
    pub eps: f64,
    pub delta: f64,
    /// Independence level of the member slots (polynomial degree + 1).
    pub k: usize,
    pub field_degree: u32,
    pub index_bits: usize,
}

/// Subset size for the given request. Computed from `eps / B` so that
/// rescaling `f` by `B` gives bit-identical sizes.
pub fn subset_size(range_bound: f64, eps: f64, delta: f64, consts: &SamplerConstants) -> usize {
    let ratio = eps / range_bound;
    (consts.c_samp * (1.0 / delta).ln() / (ratio * ratio)).ceil() as usize
}

pub fn independence_level(delta: f64, consts: &SamplerConstants) -> usize {
    ((consts.c_k * (1.0 / delta).ln()).ceil() as usize).max(1)
}

/// Builds the family `S(n, B, eps, delta)`. A domain that is not a power of
/// two is padded up to one.
pub fn family_build(
    n: usize,
    range_bound: f64,
    eps: f64,
    delta: f64,
    consts: &SamplerConstants,
) -> Result<SubsetFamily> {
    if n == 0 {
        return Err(Error::InvalidParams("sampler domain must be nonempty".into()));
    }
    if !(range_bound >= 1.0 && range_bound.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "range bound {range_bound} must be >= 1"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!(
            "sampler needs 0 < eps, delta < 1 (got eps={eps}, delta={delta})"
        )));
    }
    let n = n.next_power_of_two();
    let s = subset_size(range_bound, eps, delta, consts);
    if s >= n {
        return Err(Error::DegenerateRequest { s, n });
    }
    let k = independence_level(delta, consts).min(s);
    let field = BinaryField::covering(n as u64)?;
    let field_degree = field.degree();
    Ok(SubsetFamily {
        n,
        s,
        range_bound,
        eps,
        delta,
        k,
        field_degree,
        index_bits: k * field_degree as usize,
    })
}

impl SubsetFamily {
    fn field(&self) -> BinaryField {
        BinaryField::new(self.field_degree).expect("validated at build")
    }

    /// Splits an integer index (its `index_bits` low bits, read most
    /// significant first) into coefficients.
    pub fn coefficients_from_u64(&self, index: u64) -> Vec<u64> {
        let w = self.field_degree as usize;
        let mask = (1u64 << w) - 1;
        (0..self.k)
            .map(|i| index >> (self.index_bits - (i + 1) * w) & mask)
            .collect()
    }

    pub fn coefficients_from_bits(&self, index: &BitString) -> Result<Vec<u64>> {
        if index.len() != self.index_bits {
            return Err(Error::LengthMismatch {
                expected: self.index_bits,
                got: index.len(),
            });
        }
        let w = self.field_degree as usize;
        Ok((0..self.k).map(|i| index.read_uint(i * w, w)).collect())
    }

    /// Element in slot `slot` of the member with the given coefficients.
    #[inline]
    pub fn element(&self, coefficients: &[u64], slot: usize) -> usize {
        debug_assert!(slot < self.s);
        element_in(&self.field(), coefficients, slot)
    }

    pub fn subset_from_coefficients(&self, coefficients: &[u64]) -> Vec<usize> {
        let mut raw = vec![0u64; self.s];
        self.field().eval_poly_run(coefficients, 0, &mut raw);
        raw.into_iter().map(|e| e as usize).collect()
    }

    pub fn subset_at(&self, index: &BitString) -> Result<Vec<usize>> {
        let coeffs = self.coefficients_from_bits(index)?;
        Ok(self.subset_from_coefficients(&coeffs))
    }

    pub fn family_size(&self) -> u128 {
        1u128 << self.index_bits
    }

    fn check_enumerable(&self) -> Result<()> {
        if self.index_bits > ENUMERATION_CAP_BITS {
            return Err(Error::FamilyTooLargeToEnumerate {
                index_bits: self.index_bits,
                cap: ENUMERATION_CAP_BITS,
            });
        }
        Ok(())
    }

    /// Occurrences of each domain element over all members and slots.
    pub fn slot_histogram(&self) -> Result<Vec<u64>> {
        self.check_enumerable()?;
        let mut counts = vec![0u64; self.n];
        for index in 0..1u64 << self.index_bits {
            for e in self.subset_from_coefficients(&self.coefficients_from_u64(index)) {
                counts[e] += 1;
            }
        }
        Ok(counts)
    }

    fn check_function(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: f.len(),
            });
        }
        if let Some((index, &value)) = f
            .iter()
            .enumerate()
            .find(|(_, &v)| !(0.0..=self.range_bound).contains(&v))
        {
            return Err(Error::RangeViolation {
                index,
                value,
                bound: self.range_bound,
            });
        }
        Ok(())
    }

    fn deviates(&self, f: &[f64], mean: f64, coefficients: &[u64]) -> bool {
        let field = self.field();
        let sum: f64 = (0..self.s).map(|r| f[element_in(&field, coefficients, r)]).sum();
        (sum / self.s as f64 - mean).abs() > self.eps
    }
}

#[inline]
fn element_in(field: &BinaryField, coefficients: &[u64], slot: usize) -> usize {
    field.eval_poly(coefficients, slot as u64) as usize
}

/// Fraction of members whose sample mean of `f` misses the true mean by more
/// than `eps`, by enumerating every member.
pub fn sampler_audit(family: &SubsetFamily, f: &[f64]) -> Result<f64> {
    family.check_function(f)?;
    family.check_enumerable()?;
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let total = 1u64 << family.index_bits;
    let failures = (0..total)
        .filter(|&i| family.deviates(f, mean, &family.coefficients_from_u64(i)))
        .count();
    Ok(failures as f64 / total as f64)
}

/// Same as [`sampler_audit`] but over `samples` uniformly drawn members.
pub fn sampler_audit_sampled(family: &SubsetFamily, f: &[f64], samples: u64, rng_seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    family.check_function(f)?;
    if samples == 0 {
        return Err(Error::InvalidParams("need at least one sample".into()));
    }
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(rng_seed);
    let mask = (1u64 << family.field_degree) - 1;
    let mut failures = 0u64;
    let mut coeffs = vec![0u64; family.k];
    for _ in 0..samples {
        coeffs.iter_mut().for_each(|c| *c = rng.gen::<u64>() & mask);
        if family.deviates(f, mean, &coeffs) {
            failures += 1;
        }
    }
    Ok(failures as f64 / samples as f64)
}
