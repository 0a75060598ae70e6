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

//! How often one Hadamard rotation leaves a large coordinate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::BinaryField;
use crate::hadamard::fwht_in_place;
use crate::pipeline::regularity_bound;
use crate::tape::SignTape;

/// Sign-seed spaces up to this many bits are enumerated.
pub const REGULARITY_ENUMERATION_BITS: usize = 24;

/// Default number of sampled tapes when enumeration is out of reach.
pub const REGULARITY_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    /// `n^{-(1/2 - alpha)}`.
    pub threshold: f64,
    pub exceed_rate: f64,
    pub exhaustive: bool,
    pub tapes: u64,
    /// `k^{k/2} / n^{alpha k - 1}`, capped at 1.
    pub bound: f64,
    /// Whether the bound is informative (below 1) and the rate meets it.
    pub bound_checked: bool,
    pub pass: bool,
}

/// `|H D(x) w|_inf` for every tape in the audit, in tape order.
fn peaks(n: usize, k: usize, w: &[f64], rng_seed: u64) -> Result<(Vec<f64>, bool)> {
    let field = BinaryField::covering(n as u64)?;
    let width = field.degree() as usize;
    let bits = k * width;
    let exhaustive = bits <= REGULARITY_ENUMERATION_BITS;
    let mask = field.mask();
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let count = if exhaustive {
        1u64 << bits
    } else {
        REGULARITY_SAMPLES
    };
    let mut signs = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let mut out = Vec::with_capacity(count as usize);
    for index in 0..count {
        let coefficients: Vec<u64> = if exhaustive {
            (0..k).map(|i| index >> ((k - 1 - i) * width) & mask).collect()
        } else {
            (0..k).map(|_| rng.gen::<u64>() & mask).collect()
        };
        let tape = SignTape::new(field, coefficients, n as u64)?;
        tape.signs_into(0, &mut signs);
        for ((b, x), s) in buf.iter_mut().zip(w).zip(&signs) {
            *b = x * s;
        }
        fwht_in_place(&mut buf)?;
        out.push(buf.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    Ok((out, exhaustive))
}

fn normalized(n: usize, w: &[f64]) -> Result<Vec<f64>> {
    if !n.is_power_of_two() {
        return Err(Error::NonPowerOfTwoLength { got: n });
    }
    if w.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: w.len(),
        });
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParams(
            "regularity audit needs a nonzero vector".into(),
        ));
    }
    Ok(w.iter().map(|x| x / norm).collect())
}

/// Relative slack so that coordinates exactly at the threshold (up to
/// rounding) are not counted as exceeding it.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Probability over `k`-wise sign tapes that `|H D(x) w|_inf` exceeds
/// `n^{-(1/2 - alpha)}`. Enumerated when the seed space allows, otherwise
/// estimated from [`REGULARITY_SAMPLES`] tapes drawn with `rng_seed`.
pub fn regularity_audit(
    n: usize,
    k: usize,
    w: &[f64],
    alpha: f64,
    rng_seed: u64,
) -> Result<RegularityReport> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParams(format!(
            "alpha must lie in (0, 1/2), got {alpha}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let w = normalized(n, w)?;
    let threshold = (n as f64).powf(alpha - 0.5);
    let (peaks, exhaustive) = peaks(n, k, &w, rng_seed)?;
    let exceed_rate = exceed_fraction(&peaks, threshold);
    let bound = regularity_bound(n, k, alpha);
    let bound_checked = bound < 1.0;
    Ok(RegularityReport {
        n,
        k,
        alpha,
        threshold,
        exceed_rate,
        exhaustive,
        tapes: peaks.len() as u64,
        bound,
        bound_checked,
        pass: !bound_checked || exceed_rate <= bound,
    })
}

fn exceed_fraction(peaks: &[f64], threshold: f64) -> f64 {
    let cut = threshold * (1.0 + THRESHOLD_SLACK);
    peaks.iter().filter(|&&p| p > cut).count() as f64 / peaks.len() as f64
}

/// Exceed rate at each threshold in `thresholds`, over the same tapes.
pub fn exceed_profile(n: usize, k: usize, w: &[f64], thresholds: &[f64], rng_seed: u64) -> Result<Vec<f64>> {
    let w = normalized(n, w)?;
    let (peaks, _) = peaks(n, k, &w, rng_seed)?;
    Ok(thresholds.iter().map(|&t| exceed_fraction(&peaks, t)).collect())
}
