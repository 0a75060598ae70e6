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

//! Parameter schedule for the recursive construction.
//!
//! The input is zero-padded to `N = pow2(max(n, ceil(1/delta)))`. Stage `i`
//! maps `R^{n_i} -> R^{s_i}` with `s_i` the sampler size for range bound
//! `n_i^{1/4}`, and the next stage works on `n_{i+1} = pow2(s_i)`. A stage is
//! kept only while `s_i <= n_i / 2`; the stage count is the largest `t` for
//! which every stage of the schedule built with per-unit budget
//! `eps / (C (t + 1))`, `delta / (C (t + 1))` satisfies that rule (and, when
//! `log N / (8 log log N) >= 2`, `2^t` does not exceed it). The output of the
//! last stage (or the padded input when `t = 0`) goes through a sign matrix
//! with `k_cw`-wise independent entries.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::bits_to_cover;
use crate::sampler::{family_build, SamplerConstants, SubsetFamily};
use crate::tape::{Component, SignTape, Slice};

/// Largest padded dimension a plan may use.
pub const MAX_PADDED_LOG2: u32 = 40;

/// How the per-stage independence levels grow from `k0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KSchedule {
    /// `k_i = 2^i * k0`.
    Geometric,
    /// `k_0 = k0`, `k_{i+1} = 2^i * k0` (so `k_1 = k_0`).
    Literal,
}

/// Which feasible stage count a plan uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageRule {
    /// The largest feasible `t`.
    MaxFeasible,
    /// The feasible `t` with the shortest seed; ties go to more stages. Seed
    /// length is then nondecreasing as `delta` shrinks, which the largest
    /// feasible `t` does not guarantee (a stage can drop out).
    MinSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Regime exponent: the construction assumes `delta >= N^{-c}`.
    pub c: f64,
    /// Tail rows: `s_out = cw_rows * ln(1/delta') / eps'^2`.
    pub cw_rows: f64,
    /// Tail independence: `k_cw = cw_independence * ln(1/delta')`.
    pub cw_independence: f64,
    pub sampler: SamplerConstants,
    /// Budget split: every stage and the tail run at `eps / (budget (t + 1))`.
    pub budget: f64,
    pub k_schedule: KSchedule,
    pub stage_rule: StageRule,
    /// Constant in the seed-length bound
    /// `r <= c_r * log2(N/delta) * log2(log2(N/delta)/eps)`.
    pub c_r: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c: 1.0,
            cw_rows: 4.0,
            cw_independence: 4.0,
            sampler: SamplerConstants::default(),
            budget: 1.0,
            k_schedule: KSchedule::Geometric,
            stage_rule: StageRule::MaxFeasible,
            c_r: 10.0,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            ("c", self.c),
            ("cw_rows", self.cw_rows),
            ("cw_independence", self.cw_independence),
            ("c_samp", self.sampler.c_samp),
            ("c_k", self.sampler.c_k),
            ("budget", self.budget),
            ("c_r", self.c_r),
        ];
        for (name, v) in vals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "constant {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub index: usize,
    /// Input dimension, a power of two.
    pub n_stage: usize,
    /// Independence of the sign tape after capping.
    pub k: usize,
    /// Independence called for by the schedule before capping.
    pub k_scheduled: usize,
    pub s_stage: usize,
    pub eps_stage: f64,
    pub delta_stage: f64,
    pub sampler: SubsetFamily,
    pub sign_bits: usize,
}

impl StageSpec {
    pub fn sign_component(&self) -> Component {
        Component::StageSigns { stage: self.index }
    }

    pub fn sampler_component(&self) -> Component {
        Component::StageSampler { stage: self.index }
    }

    pub fn sampler_bits(&self) -> usize {
        self.sampler.index_bits
    }

    /// `sqrt(n / s)`.
    pub fn scale(&self) -> f64 {
        (self.n_stage as f64 / self.s_stage as f64).sqrt()
    }

    /// Regularization failure term `k^{k/2} / n^{k/8 - 1}`, capped at 1.
    pub fn regularity_slack(&self) -> f64 {
        regularity_bound(self.n_stage, self.k, 0.125)
    }
}

/// `k^{k/2} / n^{alpha k - 1}`, capped at 1.
pub fn regularity_bound(n: usize, k: usize, alpha: f64) -> f64 {
    let k = k as f64;
    let log = 0.5 * k * k.ln() - (alpha * k - 1.0) * (n as f64).ln();
    log.exp().min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    pub m_in: usize,
    pub s_out: usize,
    pub k_cw: usize,
    pub eps_tail: f64,
    pub delta_tail: f64,
    pub sign_bits: usize,
}

impl TailSpec {
    pub fn sign_component(&self) -> Component {
        Component::TailSigns
    }

    pub fn domain_size(&self) -> u64 {
        self.s_out as u64 * self.m_in as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JlPlan {
    pub n_input: usize,
    /// Padded ambient dimension `N`.
    pub n_padded: usize,
    pub eps: f64,
    pub delta: f64,
    pub constants: Constants,
    /// Regime exponent actually used (raised when `delta < N^{-c}`).
    pub c_effective: f64,
    pub k0: usize,
    /// Cap on `t` from `2^t = log N / (8 log log N)`, when that is at least 2.
    pub t_cap: Option<usize>,
    pub t: usize,
    pub eps_unit: f64,
    pub delta_unit: f64,
    pub stages: Vec<StageSpec>,
    pub tail: TailSpec,
    /// Dimension entering the tail.
    pub m: usize,
    pub s_out: usize,
    pub seed_length_bits: usize,
    /// `c_r * log2(N/delta) * log2(log2(N/delta)/eps)`.
    pub seed_length_bound: f64,
    /// `(1 + eps_unit)^(t+1) - 1`: worst-case upward distortion when every
    /// unit stays within its budget.
    pub composed_eps_upper: f64,
    /// `1 - (1 - eps_unit)^(t+1)`.
    pub composed_eps_lower: f64,
    /// Union bound on the failure probability: `(t + 1) delta_unit` plus the
    /// regularity terms of the stages.
    pub composed_delta: f64,
    pub slices: Vec<Slice>,
}

fn even_ceil(x: f64) -> usize {
    let c = x.ceil() as usize;
    c + c % 2
}

/// Largest even integer strictly below `n^{1/8}`.
fn k_cap(n: usize) -> usize {
    let root = (n as f64).powf(0.125);
    let mut k = root.floor() as usize;
    if k as f64 >= root {
        k = k.saturating_sub(1);
    }
    k - k % 2
}

fn scheduled_k(i: usize, k0: usize, schedule: KSchedule) -> usize {
    match schedule {
        KSchedule::Geometric => k0 << i.min(32),
        KSchedule::Literal if i == 0 => k0,
        KSchedule::Literal => k0 << (i - 1).min(32),
    }
}

/// `t` cap from `2^t = log N / (8 log log N)` (base 2), if it allows a stage.
pub fn stage_count_cap(n_padded: usize) -> Option<usize> {
    let lg = (n_padded as f64).log2();
    if lg <= 2.0 {
        return None;
    }
    let x = lg / (8.0 * lg.log2());
    if x >= 2.0 {
        Some(x.log2().floor() as usize)
    } else {
        None
    }
}

/// Seed-length bound `c_r * log2(N/delta) * log2(log2(N/delta)/eps)`.
pub fn seed_length_bound(c_r: f64, n_padded: usize, eps: f64, delta: f64) -> f64 {
    let l = (n_padded as f64 / delta).log2();
    c_r * l * (l / eps).log2()
}

struct Schedule {
    stages: Vec<StageSpec>,
    feasible: bool,
}

fn build_schedule(
    n_padded: usize,
    t: usize,
    eps_unit: f64,
    delta_unit: f64,
    k0: usize,
    consts: &Constants,
) -> Schedule {
    let mut stages = Vec::with_capacity(t);
    let mut n_i = n_padded;
    for i in 0..t {
        let range_bound = (n_i as f64).powf(0.25);
        let family = match family_build(n_i, range_bound, eps_unit, delta_unit, &consts.sampler) {
            Ok(f) => f,
            Err(_) => {
                return Schedule {
                    stages,
                    feasible: false,
                }
            }
        };
        if family.s > n_i / 2 {
            return Schedule {
                stages,
                feasible: false,
            };
        }
        let k_scheduled = scheduled_k(i, k0, consts.k_schedule);
        let k = k_scheduled.min(k_cap(n_i)).max(4);
        stages.push(StageSpec {
            index: i,
            n_stage: n_i,
            k,
            k_scheduled,
            s_stage: family.s,
            eps_stage: eps_unit,
            delta_stage: delta_unit,
            sign_bits: SignTape::seed_bits(k, n_i as u64),
            sampler: family,
        });
        n_i = stages[i].s_stage.next_power_of_two();
    }
    Schedule {
        stages,
        feasible: true,
    }
}

pub fn plan_build(n: usize, eps: f64, delta: f64, consts: &Constants) -> Result<JlPlan> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    consts.validate()?;
    let inv_delta = (1.0 / delta).ceil();
    if inv_delta >= 2f64.powi(MAX_PADDED_LOG2 as i32) || n as u64 > 1u64 << MAX_PADDED_LOG2 {
        return Err(Error::InvalidParams(format!(
            "padded dimension would exceed 2^{MAX_PADDED_LOG2}"
        )));
    }
    let n_padded = n.max(inv_delta as usize).next_power_of_two();

    let ln_n = (n_padded as f64).ln();
    let c_effective = if ln_n > 0.0 {
        consts.c.max((1.0 / delta).ln() / ln_n)
    } else {
        consts.c
    };
    let k0 = even_ceil(16.0 * (c_effective + 1.0));
    let t_cap = stage_count_cap(n_padded);

    let units = |t: usize| {
        let d = consts.budget * (t + 1) as f64;
        (eps / d, delta / d)
    };
    // Every feasible stage count, each with its own budget split.
    let mut candidates = vec![Vec::new()];
    loop {
        let next = candidates.len();
        if t_cap.is_some_and(|cap| next > cap) {
            break;
        }
        let (e, d) = units(next);
        let sched = build_schedule(n_padded, next, e, d, k0, consts);
        if !sched.feasible {
            break;
        }
        candidates.push(sched.stages);
    }
    let base = Base {
        n,
        n_padded,
        eps,
        delta,
        consts,
        c_effective,
        k0,
        t_cap,
    };
    let mut plans = candidates
        .into_iter()
        .map(|stages| assemble(&base, stages, units));
    match consts.stage_rule {
        StageRule::MaxFeasible => Ok(plans.next_back().expect("t = 0 is always feasible")),
        StageRule::MinSeed => Ok(plans
            .reduce(|best, p| {
                if p.seed_length_bits <= best.seed_length_bits {
                    p
                } else {
                    best
                }
            })
            .expect("t = 0 is always feasible")),
    }
}

struct Base<'a> {
    n: usize,
    n_padded: usize,
    eps: f64,
    delta: f64,
    consts: &'a Constants,
    c_effective: f64,
    k0: usize,
    t_cap: Option<usize>,
}

fn assemble(base: &Base<'_>, stages: Vec<StageSpec>, units: impl Fn(usize) -> (f64, f64)) -> JlPlan {
    let consts = base.consts;
    let t = stages.len();
    let (eps_unit, delta_unit) = units(t);
    let n_padded = base.n_padded;

    let m = stages.last().map_or(n_padded, |s| s.s_stage);
    let ln_inv = (1.0 / delta_unit).ln();
    let s_out = ((consts.cw_rows * ln_inv / (eps_unit * eps_unit)).ceil() as usize).max(1);
    let k_cw = ((consts.cw_independence * ln_inv).ceil() as usize).max(4);
    let domain = s_out as u64 * m as u64;
    let tail = TailSpec {
        m_in: m,
        s_out,
        k_cw,
        eps_tail: eps_unit,
        delta_tail: delta_unit,
        sign_bits: k_cw * bits_to_cover(domain) as usize,
    };

    let mut plan = JlPlan {
        n_input: base.n,
        n_padded,
        eps: base.eps,
        delta: base.delta,
        constants: *consts,
        c_effective: base.c_effective,
        k0: base.k0,
        t_cap: base.t_cap,
        t,
        eps_unit,
        delta_unit,
        stages,
        tail,
        m,
        s_out,
        seed_length_bits: 0,
        seed_length_bound: seed_length_bound(consts.c_r, n_padded, base.eps, base.delta),
        composed_eps_upper: (1.0 + eps_unit).powi(t as i32 + 1) - 1.0,
        composed_eps_lower: 1.0 - (1.0 - eps_unit).powi(t as i32 + 1),
        composed_delta: 0.0,
        slices: Vec::new(),
    };
    plan.composed_delta = ((t + 1) as f64 * delta_unit
        + plan.stages.iter().map(StageSpec::regularity_slack).sum::<f64>())
    .min(1.0);
    let mut offset = 0;
    for (component, len) in plan.slice_schedule() {
        plan.slices.push(Slice {
            component,
            offset,
            len,
        });
        offset += len;
    }
    plan.seed_length_bits = offset;
    plan
}

impl JlPlan {
    /// Component slices and their lengths in canonical tape order.
    pub fn slice_schedule(&self) -> Vec<(Component, usize)> {
        let mut out = Vec::with_capacity(2 * self.stages.len() + 1);
        for st in &self.stages {
            out.push((st.sign_component(), st.sign_bits));
            out.push((st.sampler_component(), st.sampler_bits()));
        }
        out.push((self.tail.sign_component(), self.tail.sign_bits));
        out
    }

    /// Seed bytes needed to hold `seed_length_bits`.
    pub fn seed_bytes(&self) -> usize {
        self.seed_length_bits.div_ceil(8)
    }

    /// Bits consumed by the stages alone.
    pub fn stage_seed_bits(&self) -> usize {
        self.stages.iter().map(|s| s.sign_bits + s.sampler_bits()).sum()
    }

    /// Bits an i.i.d. sign matrix of the same output size would need.
    pub fn iid_seed_bits(&self) -> u128 {
        self.s_out as u128 * self.n_padded as u128
    }

    /// Squared-norm window `[(1 - eps_unit)^t, (1 + eps_unit)^t]` for the
    /// stages-only output.
    pub fn stage_window(&self) -> (f64, f64) {
        let t = self.t as i32;
        ((1.0 - self.eps_unit).powi(t), (1.0 + self.eps_unit).powi(t))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: JlPlan =
            serde_json::from_str(text).map_err(|e| Error::Malformed(format!("plan file: {e}")))?;
        plan.check_consistency()?;
        Ok(plan)
    }

    /// Re-derives the plan from its own parameters and rejects edited files.
    pub fn check_consistency(&self) -> Result<()> {
        let rebuilt = plan_build(self.n_input, self.eps, self.delta, &self.constants)?;
        if rebuilt.to_json() != self.to_json() {
            return Err(Error::Malformed(
                "plan file does not match the schedule its parameters produce".into(),
            ));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(self.hash_bytes())
    }

    pub fn hash_bytes(&self) -> [u8; 32] {
        Sha256::digest(self.to_json().as_bytes()).into()
    }
}
