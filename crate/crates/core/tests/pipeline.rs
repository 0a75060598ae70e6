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

use djl_core::field::bits_to_cover;
use djl_core::hadamard::hadamard_entry;
use djl_core::pipeline::{
    cw_apply, generate_apply, pad_input, plan_build, stage_apply, Constants, JlMatrix, JlPlan, StageRule,
};
use djl_core::sampler::SamplerConstants;
use djl_core::tape::{tape_partition, BitString, Component, SeedTape, SignTape};
use proptest::prelude::*;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tape(plan: &JlPlan, seed: u64) -> SeedTape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bytes = vec![0u8; plan.seed_bytes()];
    rng.fill_bytes(&mut bytes);
    tape_partition(plan, &BitString::from_bytes(bytes)).unwrap()
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn staged(n: usize) -> JlPlan {
    let consts = Constants {
        sampler: SamplerConstants {
            c_samp: 0.05,
            c_k: 2.0,
        },
        ..Constants::default()
    };
    let plan = plan_build(n, 0.4, 0.8, &consts).unwrap();
    assert!(plan.t >= 1);
    plan
}

#[test]
fn padding_examples() {
    let plan = plan_build(3, 0.5, 0.25, &Constants::default()).unwrap();
    assert_eq!(plan.n_padded, 4);
    let p = pad_input(&[1.0, 2.0, 3.0], &plan).unwrap();
    assert_eq!(p.as_slice(), &[1.0, 2.0, 3.0, 0.0]);
    assert!(pad_input(&[1.0, 2.0], &plan).is_err());

    let w = random_vec(1000, 5);
    let plan = plan_build(1000, 0.5, 0.01, &Constants::default()).unwrap();
    assert_eq!(plan.n_padded, 1024);
    assert_eq!(
        sq(pad_input(&w, &plan).unwrap().as_slice()).to_bits(),
        sq(&w).to_bits()
    );
    let plan = plan_build(64, 0.5, 0.1, &Constants::default()).unwrap();
    assert_eq!(pad_input(&w[..64], &plan).unwrap().as_slice(), &w[..64]);
}

// Dense oracle: sqrt(n/s) P_S H D(x) built entry by entry.
#[test]
fn stage_matches_dense_matrix() {
    let plan = staged(8);
    let spec = &plan.stages[0];
    assert_eq!((spec.n_stage, spec.s_stage), (8, 4));
    for seed in 0..20 {
        let tape = random_tape(&plan, seed);
        let g = JlMatrix::new(&plan, &tape).unwrap();
        let stage = &g.stages()[0];
        let subset = stage.subset();
        let x = stage.signs.sign_vector();
        let v = random_vec(8, 100 + seed);
        let got = stage_apply(spec, &tape, &v).unwrap();
        for (r, &row) in subset.iter().enumerate() {
            let dense: f64 = (0..8)
                .map(|j| (8.0f64 / 4.0).sqrt() * hadamard_entry(8, row, j) * x[j] as f64 * v[j])
                .sum();
            assert!((dense - got[r]).abs() < 1e-12);
        }
        assert_eq!(stage_apply(spec, &tape, &[0.0; 8]).unwrap(), vec![0.0; 4]);
    }
}

#[test]
fn basis_vectors_pass_stages_exactly() {
    for n in [8, 16, 1 << 16] {
        let plan = if n < 1024 {
            staged(n)
        } else {
            plan_build(n, 0.5, 0.1, &Constants::default()).unwrap()
        };
        for seed in 0..3 {
            let tape = random_tape(&plan, seed);
            let g = JlMatrix::new(&plan, &tape).unwrap();
            for j in [0, 1, n / 2, n - 1] {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let out = g.stages()[0].apply(&e).unwrap();
                assert!((sq(&out) - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn tail_basis_and_rank_one() {
    let plan = plan_build(64, 0.5, 0.1, &Constants::default()).unwrap();
    assert_eq!(plan.t, 0);
    let tape = random_tape(&plan, 9);
    for j in 0..64 {
        let mut e = vec![0.0; 64];
        e[j] = 1.0;
        assert!((sq(&cw_apply(&plan.tail, &tape, &e).unwrap()) - 1.0).abs() < 1e-12);
    }
    let zeros = tape_partition(&plan, &BitString::zeros(plan.seed_length_bits)).unwrap();
    let v = random_vec(64, 1);
    let expect = v.iter().sum::<f64>() / (plan.s_out as f64).sqrt();
    for y in cw_apply(&plan.tail, &zeros, &v).unwrap() {
        assert!((y - expect).abs() < 1e-12);
    }
}

// s_out = 2, m_in = 4: over all pairwise tapes on GF(8), the mean squared
// norm equals |v|^2.
#[test]
fn tail_expectation_by_enumeration() {
    let field = djl_core::field::BinaryField::new(3).unwrap();
    let v = [0.3, -1.2, 0.7, 2.0];
    let mut total = 0.0;
    for seed in 0..64u64 {
        let tape = SignTape::new(field, vec![seed >> 3, seed & 7], 8).unwrap();
        let x = tape.sign_vector();
        let out: Vec<f64> = (0..2)
            .map(|r| (0..4).map(|j| x[r * 4 + j] as f64 * v[j]).sum::<f64>() / 2f64.sqrt())
            .collect();
        total += sq(&out);
    }
    assert!((total / 64.0 - sq(&v)).abs() < 1e-12);
}

#[test]
fn zero_maps_to_zero() {
    for plan in [
        staged(16),
        plan_build(1 << 16, 0.5, 0.1, &Constants::default()).unwrap(),
    ] {
        let tape = random_tape(&plan, 3);
        let out = generate_apply(&plan, &tape, &vec![0.0; plan.n_input]).unwrap();
        assert_eq!(out, vec![0.0; plan.s_out]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn linear_in_w(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, n in prop::sample::select(vec![5usize, 16, 200, 1 << 14])) {
        let plan = plan_build(n, 0.5, 0.2, &Constants::default()).unwrap();
        let tape = random_tape(&plan, seed);
        let u = random_vec(n, seed ^ 1);
        let v = random_vec(n, seed ^ 2);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let (gu, gv, gc) = (
            generate_apply(&plan, &tape, &u).unwrap(),
            generate_apply(&plan, &tape, &v).unwrap(),
            generate_apply(&plan, &tape, &combo).unwrap(),
        );
        let scale = 1.0 + sq(&gu).sqrt() + sq(&gv).sqrt();
        for i in 0..plan.s_out {
            prop_assert!((a * gu[i] + b * gv[i] - gc[i]).abs() < 1e-12 * scale * 8.0);
        }
        prop_assert_eq!(&gc, &generate_apply(&plan, &tape, &combo).unwrap());
    }
}

// n^{(1/2)^i} <= n_i <= n^{(1/2)^i} G^2 with G = 2 c_samp ln(1/delta_u) / eps_u^2,
// re-derived here from the sampler size formula.
#[test]
fn dimension_sandwich() {
    let consts = Constants::default();
    for (n, eps, delta) in [(1usize << 20, 0.5, 0.5), (1 << 24, 0.5, 0.5), (1 << 20, 0.5, 0.1)] {
        let plan = plan_build(n, eps, delta, &consts).unwrap();
        assert!(plan.t >= 1, "n={n}");
        let f = consts.sampler.c_samp * (1.0 / plan.delta_unit).ln() / (plan.eps_unit * plan.eps_unit);
        let g = 2.0 * f;
        let mut expected_n = plan.n_padded;
        for (i, st) in plan.stages.iter().enumerate() {
            assert_eq!(st.n_stage, expected_n);
            let b = (expected_n as f64).powf(0.25);
            let s = (consts.sampler.c_samp * (1.0 / plan.delta_unit).ln() / (plan.eps_unit / b).powi(2))
                .ceil() as usize;
            assert_eq!(st.s_stage, s);
            assert!(2 * s <= st.n_stage);
            let root = (plan.n_padded as f64).powf(0.5f64.powi(i as i32));
            assert!(root <= st.n_stage as f64 * (1.0 + 1e-9));
            assert!(st.n_stage as f64 <= root * g * g);
            assert!(st.k >= 4 && st.k % 2 == 0);
            expected_n = s.next_power_of_two();
        }
        assert_eq!(plan.m, plan.stages.last().unwrap().s_stage);
    }
}

#[test]
fn seed_bits_never_drop_as_delta_shrinks() {
    let min_seed = Constants {
        stage_rule: StageRule::MinSeed,
        ..Constants::default()
    };
    for n in [16usize, 1 << 10, 1 << 16, 1 << 20] {
        for eps in [0.1, 0.5, 0.9] {
            let mut last = 0;
            let mut last_fixed: Option<(usize, usize)> = None;
            for e in 1..40 {
                let delta = 0.9 * 0.7f64.powi(e);
                let bits = plan_build(n, eps, delta, &min_seed).unwrap().seed_length_bits;
                assert!(bits >= last, "n={n} eps={eps} delta={delta}: {bits} < {last}");
                last = bits;
                // Largest feasible t: monotone while t is unchanged.
                let p = plan_build(n, eps, delta, &Constants::default()).unwrap();
                if let Some((t, b)) = last_fixed {
                    if t == p.t {
                        assert!(p.seed_length_bits >= b);
                    }
                }
                last_fixed = Some((p.t, p.seed_length_bits));
            }
        }
    }
}

#[test]
fn tail_only_partition_is_one_slice() {
    let plan = plan_build(64, 0.5, 0.1, &Constants::default()).unwrap();
    let tape = tape_partition(&plan, &BitString::zeros(plan.seed_length_bits)).unwrap();
    assert_eq!(tape.partition().len(), 1);
    let s = tape.partition()[0];
    assert_eq!(
        (s.component, s.offset, s.len),
        (Component::TailSigns, 0, plan.seed_length_bits)
    );
    assert!(tape_partition(&plan, &BitString::zeros(plan.seed_length_bits - 1)).is_err());
}

// Slice lengths recomputed from the cost formulas.
#[test]
fn desk_slice_table() {
    for (n, eps, delta) in [(1024, 0.5, 0.01), (1 << 16, 0.5, 0.1), (1 << 20, 0.5, 0.5)] {
        let plan = plan_build(n, eps, delta, &Constants::default()).unwrap();
        let mut expect = Vec::new();
        for st in &plan.stages {
            let w = bits_to_cover(st.n_stage as u64) as usize;
            expect.push(st.k * w);
            expect.push(st.sampler.k * bits_to_cover(st.sampler.n as u64) as usize);
        }
        expect.push(plan.tail.k_cw * bits_to_cover((plan.s_out * plan.m) as u64) as usize);
        let lens: Vec<usize> = plan.slices.iter().map(|s| s.len).collect();
        assert_eq!(lens, expect);
        let mut offset = 0;
        for s in &plan.slices {
            assert_eq!(s.offset, offset);
            offset += s.len;
        }
        assert_eq!(offset, plan.seed_length_bits);
    }
}

#[test]
fn plan_is_deterministic_and_round_trips() {
    let a = plan_build(1 << 20, 0.5, 0.001, &Constants::default()).unwrap();
    let b = plan_build(1 << 20, 0.5, 0.001, &Constants::default()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let back = JlPlan::from_json(&a.to_json()).unwrap();
    assert_eq!(back, a);
    let edited = a.to_json().replace(
        &format!("\"seed_length_bits\": {}", a.seed_length_bits),
        "\"seed_length_bits\": 1",
    );
    assert!(JlPlan::from_json(&edited).is_err());
}
