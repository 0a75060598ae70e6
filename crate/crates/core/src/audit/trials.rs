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

//! Monte Carlo distortion audits and the i.i.d. sign-matrix baseline.
//!
//! Trial `i` draws its tape from ChaCha20 keyed by `SHA-256("djl/tapes" ||
//! rng_seed)` on stream `i`; the baseline matrix for trial `i` comes from the
//! key `SHA-256("djl/baseline" || rng_seed)` on stream `i`. Reports depend
//! only on the plan, the vector and `rng_seed`.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::stats::{wilson_interval, Z_99};
use crate::error::{Error, Result};
use crate::pipeline::{JlMatrix, JlPlan};
use crate::tape::{tape_partition, BitString};

pub const HISTOGRAM_BINS: usize = 20;

/// `(1/sqrt(s)) A w` with `A[r][j] = -1` iff bit `r * n + j` of `seed` is set.
pub fn baseline_apply(s: usize, seed: &BitString, w: &[f64]) -> Result<Vec<f64>> {
    let n = w.len();
    let needed = s * n;
    if seed.len() < needed {
        return Err(Error::BitsTooShort {
            needed,
            got: seed.len(),
        });
    }
    let scale = 1.0 / (s as f64).sqrt();
    Ok((0..s)
        .map(|r| {
            let acc: f64 = w
                .iter()
                .enumerate()
                .map(|(j, &x)| if seed.get(r * n + j) { -x } else { x })
                .sum();
            scale * acc
        })
        .collect())
}

fn stream_key(label: &str, rng_seed: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update(rng_seed);
    h.finalize().into()
}

/// Uniform bits for trial `trial` of the stream named `label`.
pub fn trial_bits(label: &str, rng_seed: &[u8], trial: u64, len: usize) -> BitString {
    let mut rng = ChaCha20Rng::from_seed(stream_key(label, rng_seed));
    rng.set_stream(trial);
    let mut bytes = vec![0u8; len.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    BitString::from_bytes_truncated(bytes, len).expect("enough bytes")
}

pub const TAPE_STREAM: &str = "djl/tapes";
pub const BASELINE_STREAM: &str = "djl/baseline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub plan_hash: String,
    pub n_input: usize,
    pub n_padded: usize,
    pub eps: f64,
    pub delta: f64,
    pub t: usize,
    pub s_out: usize,
    pub seed_length_bits: usize,
}

impl PlanSummary {
    pub fn of(plan: &JlPlan) -> Self {
        Self {
            plan_hash: plan.hash(),
            n_input: plan.n_input,
            n_padded: plan.n_padded,
            eps: plan.eps,
            delta: plan.delta,
            t: plan.t,
            s_out: plan.s_out,
            seed_length_bits: plan.seed_length_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub failures: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl RateEstimate {
    pub fn new(failures: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(failures, trials, Z_99);
        Self {
            failures,
            rate: failures as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub params: PlanSummary,
    pub vector: String,
    pub trials: u64,
    pub rng_seed: String,
    /// Event `| |G(y)w|^2 - 1 | > eps`, with a 99% Wilson interval.
    pub failure: RateEstimate,
    /// Event that the stages-only output leaves
    /// `[(1 - eps_unit)^t, (1 + eps_unit)^t]`; zero when `t = 0`.
    pub stage_failure: RateEstimate,
    /// Upper edges of the `|distortion|` bins; the last bin is open-ended.
    pub histogram_edges: Vec<f64>,
    pub histogram: Vec<u64>,
    /// Fraction of trials with `|H D(x) w|_inf > n_0^{-3/8}` in stage 0
    /// (zero when `t = 0`).
    pub linf_exceed_rate: f64,
    /// Same failure event for an i.i.d. sign matrix with `s_out` rows.
    pub baseline_failure: RateEstimate,
    /// Whether the failure interval's upper end is at most `delta`.
    pub pass: bool,
    #[serde(skip)]
    pub wall_time: f64,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        let mut low = 0.0;
        for (i, &count) in self.histogram.iter().enumerate() {
            match self.histogram_edges.get(i) {
                Some(&high) => {
                    out.push_str(&format!("{low},{high},{count}\n"));
                    low = high;
                }
                None => out.push_str(&format!("{low},inf,{count}\n")),
            }
        }
        out
    }

    /// Explicit rate is no worse than `max(delta, baseline + 3 widths)`, where
    /// a width is the larger of the two interval widths.
    pub fn comparable_to_baseline(&self) -> bool {
        let width = self.failure.width().max(self.baseline_failure.width());
        self.failure.rate <= self.params.delta.max(self.baseline_failure.rate + 3.0 * width)
    }

    /// `|explicit - baseline| <= 3` interval widths (the larger of the two).
    pub fn within_three_widths_of_baseline(&self) -> bool {
        let width = self.failure.width().max(self.baseline_failure.width());
        (self.failure.rate - self.baseline_failure.rate).abs() <= 3.0 * width
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn distortion_audit(
    plan: &JlPlan,
    name: &str,
    w: &[f64],
    trials: u64,
    rng_seed: &[u8],
) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("audit needs at least one trial".into()));
    }
    if w.len() != plan.n_input {
        return Err(Error::LengthMismatch {
            expected: plan.n_input,
            got: w.len(),
        });
    }
    let start = Instant::now();
    let norm2 = sq_norm(w);
    if norm2 == 0.0 {
        return Err(Error::InvalidParams("audit vector must be nonzero".into()));
    }
    let w: Vec<f64> = w.iter().map(|x| x / norm2.sqrt()).collect();
    let edges: Vec<f64> = (1..HISTOGRAM_BINS).map(|i| plan.eps * i as f64 / 10.0).collect();
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    let (lo_window, hi_window) = plan.stage_window();
    let linf_threshold = (plan.n_padded as f64).powf(-0.375);

    let mut failures = 0u64;
    let mut stage_failures = 0u64;
    let mut linf_exceed = 0u64;
    let mut baseline_failures = 0u64;
    for trial in 0..trials {
        let bits = trial_bits(TAPE_STREAM, rng_seed, trial, plan.seed_length_bits);
        let tape = tape_partition(plan, &bits)?;
        let g = JlMatrix::new(plan, &tape)?;

        if let Some(first) = g.stages().first() {
            let mut u = crate::pipeline::pad_input(&w, plan)?.into_vec();
            crate::hadamard::regularize_in_place(&mut u, &first.signs)?;
            if u.iter().any(|x| x.abs() > linf_threshold) {
                linf_exceed += 1;
            }
        }
        let mid = g.apply_stages(&w)?;
        let mid_norm = sq_norm(&mid);
        if mid_norm < lo_window || mid_norm > hi_window {
            stage_failures += 1;
        }
        let out = g.tail().apply(&mid)?;
        let distortion = (sq_norm(&out) - 1.0).abs();
        if distortion > plan.eps {
            failures += 1;
        }
        let bin = edges
            .iter()
            .position(|&e| distortion < e)
            .unwrap_or(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;

        let base_bits = trial_bits(BASELINE_STREAM, rng_seed, trial, plan.s_out * w.len());
        let base = baseline_apply(plan.s_out, &base_bits, &w)?;
        if (sq_norm(&base) - 1.0).abs() > plan.eps {
            baseline_failures += 1;
        }
    }
    let failure = RateEstimate::new(failures, trials);
    let pass = failure.ci_high <= plan.delta;
    Ok(AuditReport {
        params: PlanSummary::of(plan),
        vector: name.to_string(),
        trials,
        rng_seed: hex::encode(rng_seed),
        failure,
        stage_failure: RateEstimate::new(stage_failures, trials),
        histogram_edges: edges,
        histogram,
        linf_exceed_rate: linf_exceed as f64 / trials as f64,
        baseline_failure: RateEstimate::new(baseline_failures, trials),
        pass,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
