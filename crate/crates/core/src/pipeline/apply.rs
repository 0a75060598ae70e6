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

//! Applying a plan: padding, the stage maps `sqrt(n/s) P_S H D(x)`, and the
//! sign-matrix tail.

use crate::error::{Error, Result};
use crate::hadamard::{regularize_in_place, PaddedVector};
use crate::pipeline::plan::{JlPlan, StageSpec, TailSpec};
use crate::tape::{SeedTape, SignTape};

/// Embeds `w` into `R^N` by keeping its coordinates and appending zeros.
pub fn pad_input(w: &[f64], plan: &JlPlan) -> Result<PaddedVector> {
    if w.len() != plan.n_input {
        return Err(Error::LengthMismatch {
            expected: plan.n_input,
            got: w.len(),
        });
    }
    PaddedVector::with_len(w, plan.n_padded)
}

/// One stage decoded from a tape.
#[derive(Debug, Clone)]
pub struct StageMap<'a> {
    pub spec: &'a StageSpec,
    pub signs: SignTape,
    pub sampler_coefficients: Vec<u64>,
}

impl<'a> StageMap<'a> {
    pub fn decode(spec: &'a StageSpec, tape: &SeedTape) -> Result<Self> {
        let signs = SignTape::from_seed(tape, spec.sign_component(), spec.k, spec.n_stage as u64)?;
        let w = spec.sampler.field_degree as usize;
        let sampler_coefficients = tape.read_words(spec.sampler_component(), w, spec.sampler.k)?;
        Ok(Self {
            spec,
            signs,
            sampler_coefficients,
        })
    }

    /// Coordinate of `H D(x) v` read by output row `r`.
    #[inline]
    pub fn selected(&self, r: usize) -> usize {
        self.spec.sampler.element(&self.sampler_coefficients, r)
    }

    pub fn subset(&self) -> Vec<usize> {
        self.spec
            .sampler
            .subset_from_coefficients(&self.sampler_coefficients)
    }

    /// `v` may be shorter than `n_stage`; missing coordinates are zero.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.spec.n_stage;
        if v.len() > n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let mut u = vec![0.0; n];
        u[..v.len()].copy_from_slice(v);
        regularize_in_place(&mut u, &self.signs)?;
        let scale = self.spec.scale();
        Ok(self.subset().into_iter().map(|i| scale * u[i]).collect())
    }
}

#[derive(Debug, Clone)]
pub struct TailMap<'a> {
    pub spec: &'a TailSpec,
    pub signs: SignTape,
}

impl<'a> TailMap<'a> {
    pub fn decode(spec: &'a TailSpec, tape: &SeedTape) -> Result<Self> {
        let signs = SignTape::from_seed(tape, spec.sign_component(), spec.k_cw, spec.domain_size())?;
        Ok(Self { spec, signs })
    }

    /// Sign of entry `(r, j)`; entries are indexed row-major.
    #[inline]
    pub fn sign(&self, r: usize, j: usize) -> f64 {
        self.signs.sign_unchecked((r * self.spec.m_in + j) as u64)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let m = self.spec.m_in;
        if v.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                got: v.len(),
            });
        }
        let scale = 1.0 / (self.spec.s_out as f64).sqrt();
        let support: Vec<(usize, f64)> = v.iter().copied().enumerate().filter(|&(_, x)| x != 0.0).collect();
        if support.len() * 16 < m {
            return Ok((0..self.spec.s_out)
                .map(|r| {
                    let acc: f64 = support.iter().map(|&(j, x)| self.sign(r, j) * x).sum();
                    scale * acc
                })
                .collect());
        }
        Ok((0..self.spec.s_out)
            .map(|r| scale * self.signs.signed_dot((r * m) as u64, v))
            .collect())
    }
}

/// A plan and a tape viewed as the concrete matrix `G(y)`.
#[derive(Debug, Clone)]
pub struct JlMatrix<'a> {
    plan: &'a JlPlan,
    stages: Vec<StageMap<'a>>,
    tail: TailMap<'a>,
}

impl<'a> JlMatrix<'a> {
    pub fn new(plan: &'a JlPlan, tape: &SeedTape) -> Result<Self> {
        if tape.bits().len() != plan.seed_length_bits || tape.partition() != plan.slices.as_slice() {
            return Err(Error::Malformed("tape was not partitioned for this plan".into()));
        }
        let stages = plan
            .stages
            .iter()
            .map(|s| StageMap::decode(s, tape))
            .collect::<Result<Vec<_>>>()?;
        let tail = TailMap::decode(&plan.tail, tape)?;
        Ok(Self { plan, stages, tail })
    }

    pub fn plan(&self) -> &JlPlan {
        self.plan
    }

    pub fn stages(&self) -> &[StageMap<'a>] {
        &self.stages
    }

    pub fn tail(&self) -> &TailMap<'a> {
        &self.tail
    }

    pub fn rows(&self) -> usize {
        self.plan.s_out
    }

    pub fn cols(&self) -> usize {
        self.plan.n_input
    }

    /// `A_{t-1} ... A_0` applied to the padded input.
    pub fn apply_stages(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut v = pad_input(w, self.plan)?.into_vec();
        for st in &self.stages {
            v = st.apply(&v)?;
        }
        Ok(v)
    }

    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        let v = self.apply_stages(w)?;
        self.tail.apply(&v)
    }

    /// `G(y)_{row, col}` by expanding the product over intermediary indices.
    pub fn entry(&self, row: usize, col: usize) -> Result<f64> {
        crate::access::entry_of(self, row, col).map(|(v, _)| v)
    }
}

pub fn stage_apply(spec: &StageSpec, tape: &SeedTape, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != spec.n_stage {
        return Err(Error::LengthMismatch {
            expected: spec.n_stage,
            got: v.len(),
        });
    }
    StageMap::decode(spec, tape)?.apply(v)
}

pub fn cw_apply(tail: &TailSpec, tape: &SeedTape, v: &[f64]) -> Result<Vec<f64>> {
    TailMap::decode(tail, tape)?.apply(v)
}

pub fn generate_apply(plan: &JlPlan, tape: &SeedTape, w: &[f64]) -> Result<Vec<f64>> {
    JlMatrix::new(plan, tape)?.apply(w)
}

impl StageMap<'_> {
    /// `sqrt(n/s) * H_{S[r], j} * x_j`.
    #[inline]
    pub fn entry_unchecked(&self, r: usize, j: usize) -> f64 {
        self.entry_with_selected(self.selected(r), j)
    }

    #[inline]
    pub(crate) fn entry_with_selected(&self, selected: usize, j: usize) -> f64 {
        let n = self.spec.n_stage;
        crate::hadamard::hadamard_entry(n, selected, j)
            * self.signs.sign_unchecked(j as u64)
            * self.spec.scale()
    }
}
