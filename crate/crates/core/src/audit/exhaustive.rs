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

//! Exact audits by enumerating every stage tape.
//!
//! With an integer direction `z`, every stage output is an integer vector
//! divided by `sqrt(s_0 s_1 ... ) |z|`: the unnormalized Hadamard transform
//! keeps integers and `sqrt(n/s) / sqrt(n) = 1/sqrt(s)`. Squared norms are
//! therefore exact rationals and both the expectation and the failure window
//! are checked without rounding. The tail is only audited in floating point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::BinaryField;
use crate::pipeline::{JlMatrix, JlPlan, StageSpec};
use crate::tape::{tape_partition, BitString, SignTape};

/// Largest seed space enumerated.
pub const EXHAUSTIVE_CAP_BITS: usize = 24;

/// End-to-end outcomes closer than this to `eps` are counted separately.
pub const TAIL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEnd {
    pub tapes: u64,
    pub failures: u64,
    pub probability: f64,
    /// Tapes whose distortion lies within `TAIL_TOLERANCE` of `eps`.
    pub near_threshold: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveReport {
    pub plan_hash: String,
    pub stage_bits: usize,
    /// Sum over tapes of the exact stage-output squared norm, as a fraction
    /// of the tape count (`num/den` in lowest terms).
    pub expectation: String,
    pub expectation_exact: bool,
    /// Tapes leaving `[(1 - eps_unit)^t, (1 + eps_unit)^t]`.
    pub stage_failures: u64,
    /// `stage_failures / 2^stage_bits`, exactly as `num/den`.
    pub stage_failure_exact: String,
    pub stage_failure_probability: f64,
    /// `sum_i (delta_i + k_i^{k_i/2} / n_i^{k_i/8 - 1})`, capped at 1.
    pub stage_bound: f64,
    pub end_to_end: Option<EndToEnd>,
}

struct StageTables {
    n: usize,
    s: usize,
    /// Row-major sign vectors, one per sign seed.
    signs: Vec<i8>,
    /// Row-major subsets, one per sampler seed.
    subsets: Vec<u32>,
}

fn split_words(index: u64, width: usize, count: usize) -> Vec<u64> {
    let mask = (1u64 << width) - 1;
    (0..count)
        .map(|i| index >> ((count - 1 - i) * width) & mask)
        .collect()
}

impl StageTables {
    fn build(spec: &StageSpec) -> Result<Self> {
        let n = spec.n_stage;
        let field = BinaryField::covering(n as u64)?;
        let w = field.degree() as usize;
        let mut signs = Vec::with_capacity(n << spec.sign_bits);
        for index in 0..1u64 << spec.sign_bits {
            let tape = SignTape::new(field, split_words(index, w, spec.k), n as u64)?;
            signs.extend(tape.sign_vector());
        }
        let fam = &spec.sampler;
        let mut subsets = Vec::with_capacity(fam.s << fam.index_bits);
        for index in 0..1u64 << fam.index_bits {
            let members = fam.subset_from_coefficients(&fam.coefficients_from_u64(index));
            subsets.extend(members.into_iter().map(|e| e as u32));
        }
        Ok(Self {
            n,
            s: spec.s_stage,
            signs,
            subsets,
        })
    }
}

fn fwht_int(v: &mut [i128]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (p, q) = (*x, *y);
                *x = p + q;
                *y = p - q;
            }
        }
        h *= 2;
    }
}

/// Calls `f` with the exact integer stage output for every stage tape, in
/// tape order.
fn walk(tables: &[StageTables], v: &[i128], f: &mut dyn FnMut(&[i128])) {
    let Some((head, rest)) = tables.split_first() else {
        f(v);
        return;
    };
    let mut u = vec![0i128; head.n];
    let mut out = vec![0i128; head.s];
    for signs in head.signs.chunks(head.n) {
        u.fill(0);
        for ((dst, &x), &sg) in u.iter_mut().zip(v).zip(signs) {
            *dst = x * sg as i128;
        }
        fwht_int(&mut u);
        for subset in head.subsets.chunks(head.s) {
            for (o, &e) in out.iter_mut().zip(subset) {
                *o = u[e as usize];
            }
            walk(rest, &out, f);
        }
    }
}

fn ratio_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn to_i128(x: BigInt) -> Result<i128> {
    x.to_i128()
        .ok_or_else(|| Error::InvalidParams("instance too large for exact audit".into()))
}

/// Exact audit of the stages for direction `z` (normalized implicitly), plus
/// a floating-point enumeration of the whole map when the seed is small
/// enough.
pub fn exhaustive_audit(plan: &JlPlan, z: &[i64]) -> Result<ExhaustiveReport> {
    if z.len() != plan.n_input {
        return Err(Error::LengthMismatch {
            expected: plan.n_input,
            got: z.len(),
        });
    }
    let norm2: i128 = z.iter().map(|&x| x as i128 * x as i128).sum();
    if norm2 == 0 {
        return Err(Error::InvalidParams("audit vector must be nonzero".into()));
    }
    let stage_bits = plan.stage_seed_bits();
    if stage_bits > EXHAUSTIVE_CAP_BITS {
        return Err(Error::SeedSpaceTooLarge {
            bits: stage_bits,
            cap: EXHAUSTIVE_CAP_BITS,
        });
    }
    let tables = plan
        .stages
        .iter()
        .map(StageTables::build)
        .collect::<Result<Vec<_>>>()?;

    // Squared norm of an outcome is sq / den.
    let den: i128 = plan.stages.iter().map(|s| s.s_stage as i128).product::<i128>() * norm2;
    let (lo, hi) = plan.stage_window();
    let den_big = BigRational::from_integer(BigInt::from(den));
    let exact = |x: f64| BigRational::from_float(x).expect("finite window") * &den_big;
    let low_cut = to_i128(exact(lo).ceil().to_integer())?;
    let high_cut = to_i128(exact(hi).floor().to_integer())?;

    let v: Vec<i128> = z.iter().map(|&x| x as i128).collect();
    let mut total: u128 = 0;
    let mut overflow = false;
    let mut failures = 0u64;
    walk(&tables, &v, &mut |out| {
        let sq: i128 = out.iter().map(|x| x * x).sum();
        if sq < low_cut || sq > high_cut {
            failures += 1;
        }
        match total.checked_add(sq as u128) {
            Some(t) => total = t,
            None => overflow = true,
        }
    });
    if overflow {
        return Err(Error::InvalidParams("instance too large for exact audit".into()));
    }
    let tapes = 1u64 << stage_bits;
    let expectation = BigRational::new(BigInt::from(total), BigInt::from(den) * BigInt::from(tapes));
    let stage_failure = BigRational::new(BigInt::from(failures), BigInt::from(tapes));
    let stage_bound = plan
        .stages
        .iter()
        .map(|s| s.delta_stage + s.regularity_slack())
        .sum::<f64>()
        .min(1.0);

    let end_to_end = if plan.seed_length_bits <= EXHAUSTIVE_CAP_BITS {
        Some(end_to_end(plan, z, norm2)?)
    } else {
        None
    };
    Ok(ExhaustiveReport {
        plan_hash: plan.hash(),
        stage_bits,
        expectation_exact: expectation == BigRational::from_integer(1.into()),
        expectation: ratio_string(&expectation),
        stage_failures: failures,
        stage_failure_exact: if stage_failure.is_zero() {
            "0/1".into()
        } else {
            ratio_string(&stage_failure)
        },
        stage_failure_probability: failures as f64 / tapes as f64,
        stage_bound,
        end_to_end,
    })
}

fn end_to_end(plan: &JlPlan, z: &[i64], norm2: i128) -> Result<EndToEnd> {
    let scale = 1.0 / (norm2 as f64).sqrt();
    let w: Vec<f64> = z.iter().map(|&x| x as f64 * scale).collect();
    let bits = plan.seed_length_bits;
    let tapes = 1u64 << bits;
    let mut failures = 0;
    let mut near_threshold = 0;
    for index in 0..tapes {
        let tape = tape_partition(plan, &BitString::from_u64(index, bits))?;
        let out = JlMatrix::new(plan, &tape)?.apply(&w)?;
        let d = (out.iter().map(|x| x * x).sum::<f64>() - 1.0).abs();
        if (d - plan.eps).abs() <= TAIL_TOLERANCE {
            near_threshold += 1;
        }
        if d > plan.eps {
            failures += 1;
        }
    }
    Ok(EndToEnd {
        tapes,
        failures,
        probability: failures as f64 / tapes as f64,
        near_threshold,
    })
}
