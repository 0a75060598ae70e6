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

//! Acceptance criteria A1-A8. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use djl_core::access::{entry, EntryQuery};
use djl_core::audit::corpus::{distortion_corpus, function_corpus, integer_corpus};
use djl_core::audit::{distortion_audit, exhaustive_audit, regularity_audit};
use djl_core::field::BinaryField;
use djl_core::pipeline::{generate_apply, plan_build, Constants, JlMatrix, JlPlan};
use djl_core::sampler::{family_build, sampler_audit, SamplerConstants};
use djl_core::tape::{tape_partition, BitString, SeedTape, SignTape};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A2: relative agreement between the entry and apply paths.
const PATH_REL_TOL: f64 = 1e-10;
/// A2: entries are compared relative to at least `1/sqrt(s_out)`, the
/// magnitude of a single tail sign, so cancellations near zero do not
/// demand precision beyond what the summands carry.
const PATH_FLOOR_SCALE: f64 = 1.0;
/// A2: spot checks at n = 4096.
const SPOT_CHECKS: usize = 1000;
/// A3: seeds per corpus vector.
const A3_TRIALS: u64 = 10_000;
/// A3: distance to the baseline, in confidence-interval widths.
const BASELINE_WIDTHS: f64 = 3.0;
/// A6: regularity exponent.
const A6_ALPHA: f64 = 0.125;
/// A8: every timing must lie within this factor of `c n log n`.
const A8_FACTOR: f64 = 2.0;
/// A8: repetitions per size; the minimum is used.
const A8_REPS: usize = 15;

struct Outcome {
    pass: bool,
    detail: String,
}

fn random_tape(plan: &JlPlan, seed: u64) -> SeedTape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bytes = vec![0u8; plan.seed_bytes()];
    rng.fill_bytes(&mut bytes);
    tape_partition(plan, &BitString::from_bytes(bytes)).unwrap()
}

fn small_stage(c_samp: f64) -> Constants {
    Constants {
        sampler: SamplerConstants { c_samp, c_k: 2.0 },
        ..Constants::default()
    }
}

/// Single-stage plans at n <= 16 whose stage seed is enumerable.
fn a1_plans() -> Vec<JlPlan> {
    let mut plans: Vec<JlPlan> = Vec::new();
    for n in [8, 16] {
        for c_samp in [0.05, 0.1, 0.25] {
            for eps in [0.3, 0.4, 0.6, 0.9] {
                for delta in [0.5, 0.8, 0.9] {
                    let Ok(p) = plan_build(n, eps, delta, &small_stage(c_samp)) else {
                        continue;
                    };
                    let shape = |q: &JlPlan| {
                        (
                            q.n_input,
                            q.stages[0].s_stage,
                            q.stages[0].k,
                            q.stages[0].sampler.k,
                        )
                    };
                    if p.t == 1 && p.stage_seed_bits() <= 24 && !plans.iter().any(|q| shape(q) == shape(&p)) {
                        plans.push(p);
                    }
                }
            }
        }
    }
    plans
}

fn a1() -> Outcome {
    let plans = a1_plans();
    if plans.is_empty() {
        return Outcome {
            pass: false,
            detail: "no enumerable single-stage plan".into(),
        };
    }
    let mut pass = true;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut audits = 0;
    let mut vacuous = true;
    for plan in &plans {
        for (name, z) in integer_corpus(plan.n_input) {
            let r = exhaustive_audit(plan, &z).unwrap();
            audits += 1;
            if !r.expectation_exact {
                pass = false;
                eprintln!(
                    "A1: expectation {} != 1 for {name} at n={}",
                    r.expectation, plan.n_input
                );
            }
            vacuous &= r.stage_bound >= 1.0;
            worst_excess = worst_excess.max(r.stage_failure_probability - plan.stages[0].delta_stage);
            if r.stage_failure_probability > r.stage_bound {
                pass = false;
                eprintln!(
                    "A1: failure {} > bound {} for {name}",
                    r.stage_failure_probability, r.stage_bound
                );
            }
        }
    }
    Outcome {
        pass,
        detail: format!(
            "{} plans, {audits} exact audits; expectation exact; max(P_fail - delta_stage) = {worst_excess:.4}{}",
            plans.len(),
            if vacuous { "; regularity slack >= 1 at these sizes, so the probability bound is vacuous" } else { "" }
        ),
    }
}

fn agree(a: f64, b: f64, floor: f64) -> bool {
    (a - b).abs() <= PATH_REL_TOL * a.abs().max(b.abs()).max(floor)
}

fn a2() -> Outcome {
    let mut plans = Vec::new();
    for n in [8, 33, 64] {
        plans.push(plan_build(n, 0.5, 0.1, &Constants::default()).unwrap());
    }
    for (n, eps, delta) in [(8, 0.4, 0.8), (16, 0.4, 0.8), (33, 0.5, 0.5), (64, 0.6, 0.5)] {
        plans.push(plan_build(n, eps, delta, &small_stage(0.05)).unwrap());
    }
    let mut checked = 0usize;
    let mut bad = 0usize;
    let mut max_rel = 0.0f64;
    let mut compare = |plan: &JlPlan,
                       tape: &SeedTape,
                       col: usize,
                       rows: &mut dyn Iterator<Item = usize>,
                       column: &[f64]| {
        let floor = PATH_FLOOR_SCALE / (plan.s_out as f64).sqrt();
        for row in rows {
            let e = entry(plan, tape, EntryQuery { row, col }).unwrap();
            let rel = (e - column[row]).abs() / e.abs().max(column[row].abs()).max(floor);
            max_rel = max_rel.max(rel);
            checked += 1;
            if !agree(e, column[row], floor) {
                bad += 1;
            }
        }
    };
    for plan in &plans {
        for seed in 0..2 {
            let tape = random_tape(plan, seed);
            for col in 0..plan.n_input {
                let mut e = vec![0.0; plan.n_input];
                e[col] = 1.0;
                let column = generate_apply(plan, &tape, &e).unwrap();
                compare(plan, &tape, col, &mut (0..plan.s_out), &column);
            }
        }
    }
    let big = [
        plan_build(4096, 0.9, 0.5, &Constants::default()).unwrap(),
        plan_build(4096, 0.9, 0.5, &small_stage(0.05)).unwrap(),
    ];
    let mut stage_counts = Vec::new();
    for (k, plan) in big.iter().enumerate() {
        stage_counts.push(plan.t);
        let tape = random_tape(plan, 77 + k as u64);
        let g = JlMatrix::new(plan, &tape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5 + k as u64);
        for _ in 0..SPOT_CHECKS {
            let (row, col) = (rng.gen_range(0..plan.s_out), rng.gen_range(0..plan.n_input));
            let mut e = vec![0.0; plan.n_input];
            e[col] = 1.0;
            let column = g.apply(&e).unwrap();
            compare(plan, &tape, col, &mut std::iter::once(row), &column);
        }
    }
    let staged = big.iter().all(|p| p.t >= 1);
    Outcome {
        pass: bad == 0 && staged,
        detail: format!(
            "{checked} entries ({} spot checks at n=4096 with t={stage_counts:?}); {bad} disagreements; max rel {max_rel:.2e} (tol {PATH_REL_TOL:e})",
            SPOT_CHECKS * big.len()
        ),
    }
}

fn a3() -> Outcome {
    let plan = plan_build(256, 0.5, 0.1, &Constants::default()).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for v in distortion_corpus(256) {
        let r = distortion_audit(&plan, &v.name, &v.values, A3_TRIALS, b"acceptance-a3").unwrap();
        let width = r.failure.width().max(r.baseline_failure.width());
        let near = (r.failure.rate - r.baseline_failure.rate).abs() <= BASELINE_WIDTHS * width;
        pass &= r.pass && near;
        lines.push(format!(
            "{}: {:.4} [ci_high {:.4}] vs iid {:.4}{}",
            v.name,
            r.failure.rate,
            r.failure.ci_high,
            r.baseline_failure.rate,
            if r.pass && near { "" } else { " <-- FAIL" }
        ));
    }
    Outcome {
        pass,
        detail: format!(
            "t={} s_out={} k_cw={}; {}",
            plan.t,
            plan.s_out,
            plan.tail.k_cw,
            lines.join("; ")
        ),
    }
}

fn a4() -> Outcome {
    let mut checks = 0u64;
    let mut pass = true;
    for degree in 1..=4u32 {
        let field = BinaryField::new(degree).unwrap();
        let q = 1u64 << degree;
        for k in 1..=3usize {
            let seeds = q.pow(k as u32);
            let vectors: Vec<Vec<i8>> = (0..seeds)
                .map(|s| {
                    let coeffs = (0..k).map(|i| s / q.pow(i as u32) % q).collect();
                    SignTape::new(field, coeffs, q).unwrap().sign_vector()
                })
                .collect();
            for size in 1..=k.min(q as usize) {
                for subset in subsets(q as usize, size) {
                    let mut counts = vec![0u64; 1 << size];
                    for v in &vectors {
                        let pattern = subset
                            .iter()
                            .enumerate()
                            .fold(0, |acc, (b, &i)| acc | usize::from(v[i] < 0) << b);
                        counts[pattern] += 1;
                    }
                    checks += 1;
                    pass &= counts.iter().all(|&c| c == seeds >> size);
                }
            }
        }
    }
    Outcome {
        pass,
        detail: format!("{checks} index sets over GF(2..16), k <= 3, all exactly uniform"),
    }
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for last in size - 1..n {
        for mut s in subsets(last, size - 1) {
            s.push(last);
            out.push(s);
        }
    }
    out
}

fn a5() -> Outcome {
    let consts = SamplerConstants::default();
    let mut pass = true;
    let mut lines = Vec::new();
    for (b, eps, delta) in [(1.0, 0.5, 0.5), (2.0, 0.9, 0.3), (1.0, 0.45, 0.4)] {
        let fam = family_build(16, b, eps, delta, &consts).unwrap();
        let hist = fam.slot_histogram().unwrap();
        let unbiased = hist.iter().all(|&c| c == hist[0]);
        let mut worst: f64 = 0.0;
        for (_, f) in function_corpus(16, b) {
            worst = worst.max(sampler_audit(&fam, &f).unwrap());
        }
        pass &= unbiased && worst <= delta;
        lines.push(format!(
            "B={b} eps={eps} delta={delta} s={} k={}: worst {worst:.4}, slot counts {}",
            fam.s,
            fam.k,
            if unbiased { "uniform" } else { "NOT uniform" }
        ));
    }
    Outcome {
        pass,
        detail: lines.join("; "),
    }
}

fn a6() -> Outcome {
    let n = 8;
    let mut pass = true;
    let mut basis_zero = true;
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let r = regularity_audit(n, 2, &e, A6_ALPHA, 0).unwrap();
        basis_zero &= r.exhaustive && r.exceed_rate == 0.0;
    }
    let mut rates = Vec::new();
    let mut bound = 0.0;
    for v in distortion_corpus(n) {
        let r = regularity_audit(n, 2, &v.values, A6_ALPHA, 0).unwrap();
        bound = r.bound;
        pass &= r.exhaustive && r.pass;
        rates.push(format!("{} {:.3}", v.name, r.exceed_rate));
    }
    Outcome {
        pass: pass && basis_zero,
        detail: format!(
            "basis rate 0: {basis_zero}; bound {}; rates {}",
            if bound >= 1.0 {
                "vacuous (>= 1)".to_string()
            } else {
                format!("{bound:.4}")
            },
            rates.join(", ")
        ),
    }
}

fn a7() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut c_r = 0.0;
    for lg in [10u32, 14, 20] {
        let n = 1usize << lg;
        for delta in [1e-2, 1e-4, 1.0 / n as f64] {
            for eps in [0.1, 0.5] {
                let p = plan_build(n, eps, delta, &Constants::default()).unwrap();
                c_r = p.constants.c_r;
                let l = (p.n_padded as f64 / delta).log2();
                worst = worst.max(p.seed_length_bits as f64 / (l * (l / eps).log2()));
                pass &= (p.seed_length_bits as f64) <= p.seed_length_bound;
                pass &= (p.seed_length_bits as u128) < p.iid_seed_bits();
            }
        }
    }
    Outcome {
        pass,
        detail: format!("C_r = {c_r}; worst r / (log2(N/delta) log2(log2(N/delta)/eps)) = {worst:.3}; r < s_out N everywhere"),
    }
}

fn a8() -> Outcome {
    let mut per = Vec::new();
    for lg in 12..=20u32 {
        let n = 1usize << lg;
        let plan = plan_build(n, 0.5, 0.1, &Constants::default()).unwrap();
        let tape = random_tape(&plan, lg as u64);
        let w: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        generate_apply(&plan, &tape, &w).unwrap();
        let best = (0..A8_REPS)
            .map(|_| {
                let t0 = Instant::now();
                std::hint::black_box(generate_apply(&plan, &tape, std::hint::black_box(&w)).unwrap());
                t0.elapsed()
            })
            .min()
            .unwrap_or(Duration::ZERO);
        per.push((lg, plan.t, best.as_secs_f64() / (n as f64 * lg as f64)));
    }
    let lo = per.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let hi = per.iter().map(|p| p.2).fold(0.0, f64::max);
    // Best constant is the geometric mean of the extremes.
    let c = (lo * hi).sqrt();
    let pass = per.iter().all(|p| p.2 <= A8_FACTOR * c && p.2 >= c / A8_FACTOR);
    let cells: Vec<String> = per
        .iter()
        .map(|(lg, t, x)| format!("2^{lg}(t={t}) {:.2}", x * 1e9))
        .collect();
    Outcome {
        pass,
        detail: format!(
            "ns per n log2 n: {}; spread {:.2} (limit {})",
            cells.join(", "),
            hi / lo,
            A8_FACTOR * A8_FACTOR
        ),
    }
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("A1 exact small-instance oracle", a1),
        ("A2 entry/apply path consistency", a2),
        ("A3 end-to-end distortion", a3),
        ("A4 k-wise uniformity", a4),
        ("A5 sampler contract", a5),
        ("A6 regularity", a6),
        ("A7 seed length", a7),
        ("A8 n log n scaling", a8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        let out = run();
        failed += usize::from(!out.pass);
        println!(
            "{} {name} ({:.1}s): {}",
            if out.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
