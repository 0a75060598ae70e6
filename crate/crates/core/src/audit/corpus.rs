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

//! Fixed test vectors for distortion and sampler audits.
//!
//! Corpus version 1. Every distortion vector has unit norm.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::BinaryField;
use crate::hadamard::fwht_in_place;
use crate::tape::SignTape;

pub const CORPUS_VERSION: u32 = 1;

/// Unit vector in `R^16` with a large average `|H D(x) w|_inf` over all
/// 4-wise sign tapes on GF(16), produced by
/// `hadamard_peak_search(PEAK_SEARCH_ITERATIONS, PEAK_SEARCH_SEED)`.
pub const HADAMARD_PEAK_16: [f64; 16] = [
    0.04251182670979014,
    0.04251182670979014,
    0.04251182670979014,
    0.3590192947483626,
    -0.39648713883012493,
    0.04251182670979014,
    0.47483567648244945,
    -0.43530285153534404,
    0.04251182670979014,
    0.38561021066302476,
    0.04251182670979014,
    -0.07038227219048307,
    0.04251182670979014,
    0.04251182670979014,
    0.04251182670979014,
    0.3592094166739449,
];
pub const PEAK_SEARCH_ITERATIONS: usize = 200;
pub const PEAK_SEARCH_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusVector {
    pub name: String,
    pub values: Vec<f64>,
}

fn unit(values: Vec<f64>) -> Vec<f64> {
    let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
    values.into_iter().map(|x| x / norm).collect()
}

/// `splitmix64(i)` low bit decides the sign of coordinate `i`.
pub fn rademacher_sign(i: usize) -> f64 {
    let mut z = (i as u64).wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    if z & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Distortion corpus in `R^n` (`n >= 2`).
pub fn distortion_corpus(n: usize) -> Vec<CorpusVector> {
    assert!(n >= 2, "corpus needs n >= 2");
    let mut out = Vec::new();
    let mut push = |name: &str, values: Vec<f64>| {
        out.push(CorpusVector {
            name: name.to_string(),
            values: unit(values),
        })
    };
    let basis = |j: usize| {
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        v
    };
    push("basis_first", basis(0));
    push("basis_last", basis(n - 1));
    let mut two = vec![0.0; n];
    two[0] = 1.0;
    two[1] = 1.0;
    push("two_point", two);
    let mut split = vec![0.0; n];
    split[0] = 1.0;
    split[n - 1] = -1.0;
    push("two_point_split", split);
    push("uniform", vec![1.0; n]);
    push(
        "geometric",
        (0..n)
            .map(|i| 0.5f64.powi(i as i32 / 2) * if i % 2 == 0 { 1.0 } else { 0.7 })
            .collect(),
    );
    push("rademacher", (0..n).map(rademacher_sign).collect());
    let mut peak = vec![0.0; n];
    let len = n.min(16);
    peak[..len].copy_from_slice(&HADAMARD_PEAK_16[..len]);
    push("hadamard_peak", peak);
    out
}

/// Integer-valued corpus for exact audits; directions only, not normalized.
pub fn integer_corpus(n: usize) -> Vec<(String, Vec<i64>)> {
    assert!(n >= 2, "corpus needs n >= 2");
    let mut out: Vec<(String, Vec<i64>)> = Vec::new();
    let basis = |j: usize| {
        let mut v = vec![0; n];
        v[j] = 1;
        v
    };
    out.push(("basis_first".into(), basis(0)));
    out.push(("basis_last".into(), basis(n - 1)));
    let mut two = vec![0; n];
    two[0] = 1;
    two[1] = 1;
    out.push(("two_point".into(), two));
    let mut split = vec![0; n];
    split[0] = 1;
    split[n - 1] = -1;
    out.push(("two_point_split".into(), split));
    out.push(("uniform".into(), vec![1; n]));
    out.push((
        "geometric".into(),
        (0..n).map(|i| if i < 6 { 32 >> i } else { 0 }).collect(),
    ));
    out.push((
        "rademacher".into(),
        (0..n).map(|i| rademacher_sign(i) as i64).collect(),
    ));
    out.push(("ramp".into(), (1..=n as i64).collect()));
    out
}

/// Functions `[n] -> [0, B]` for sampler audits.
pub fn function_corpus(n: usize, bound: f64) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    out.push(("zero".to_string(), vec![0.0; n]));
    out.push(("constant_half".to_string(), vec![bound / 2.0; n]));
    out.push(("constant_max".to_string(), vec![bound; n]));
    let mut ind = vec![0.0; n];
    ind[0] = bound;
    out.push(("indicator_first".to_string(), ind));
    out.push((
        "indicator_half".to_string(),
        (0..n).map(|i| if i < n / 2 { bound } else { 0.0 }).collect(),
    ));
    out.push((
        "indicator_odd".to_string(),
        (0..n).map(|i| if i % 2 == 1 { bound } else { 0.0 }).collect(),
    ));
    out.push((
        "ramp".to_string(),
        (0..n).map(|i| bound * i as f64 / (n - 1).max(1) as f64).collect(),
    ));
    let mut two = vec![0.0; n];
    two[0] = bound;
    two[n - 1] = bound;
    out.push(("two_point".to_string(), two));
    out.push((
        "quarter_block".to_string(),
        (0..n)
            .map(|i| if i < n.div_ceil(4) { bound } else { 0.0 })
            .collect(),
    ));
    out
}

/// Mean of `|H D(x) w|_inf` over every 4-wise sign tape on GF(16). (Pairwise
/// tapes are useless here: their sign vectors are Hadamard rows, so the
/// uniform vector already peaks at 1.)
pub fn mean_peak_16(w: &[f64]) -> f64 {
    assert_eq!(w.len(), 16);
    let mut total = 0.0;
    let mut buf = [0.0; 16];
    for signs in four_wise_signs_16().chunks(16) {
        for ((b, x), s) in buf.iter_mut().zip(w).zip(signs) {
            *b = x * s;
        }
        fwht_in_place(&mut buf).expect("power of two");
        total += buf.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    }
    total / 65536.0
}

fn four_wise_signs_16() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let field = BinaryField::new(4).expect("GF(16)");
        let mut out = vec![0.0; 16 << 16];
        for (seed, row) in out.chunks_mut(16).enumerate() {
            let coefficients = (0..4).map(|i| (seed as u64) >> (4 * i) & 0xf).collect();
            SignTape::new(field, coefficients, 16)
                .expect("valid tape")
                .signs_into(0, row);
        }
        out
    })
}

/// Hill climbing on the unit sphere in `R^16` for [`mean_peak_16`], starting
/// from the uniform vector.
pub fn hadamard_peak_search(iterations: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = unit(vec![1.0; 16]);
    let mut score = mean_peak_16(&best);
    let mut step = 0.5;
    for it in 0..iterations {
        let j = rng.gen_range(0..16);
        let delta = if rng.gen::<bool>() { step } else { -step };
        let mut cand = best.clone();
        cand[j] += delta;
        let cand = unit(cand);
        let s = mean_peak_16(&cand);
        if s > score {
            best = cand;
            score = s;
        }
        if it % 50 == 49 {
            step *= 0.7;
        }
    }
    best
}
