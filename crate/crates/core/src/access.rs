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

//! Single-entry access to `G(y)` without materializing any stage.
//!
//! `G = T * A_{t-1} * ... * A_0` (with zero padding between stages), so
//!
//! ```text
//! G[row, col] = sum over (i_t, ..., i_1) of
//!     T[row, i_t] * A_{t-1}[i_t, i_{t-1}] * ... * A_0[i_1, col]
//! ```
//!
//! where `i_l` ranges over the `s_{l-1}` outputs of stage `l - 1`. Tuples are
//! visited lexicographically (`i_t` outermost) with an odometer holding one
//! counter, one partial product and one cached sampler element per level,
//! and the terms are accumulated with Neumaier's compensated sum.

use crate::error::{Error, Result};
use crate::pipeline::{JlMatrix, JlPlan, StageMap, StageSpec};
use crate::tape::SeedTape;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryQuery {
    pub row: usize,
    pub col: usize,
}

/// Work and memory used by one entry evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryStats {
    /// Scalar cells of working state (counters, partial products, cached
    /// sampler elements, accumulator), excluding seed coefficients.
    pub live_cells: usize,
    /// Number of intermediary tuples visited.
    pub terms: u64,
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn stage_entry(spec: &StageSpec, tape: &SeedTape, r: usize, j: usize) -> Result<f64> {
    if r >= spec.s_stage {
        return Err(Error::IndexOutOfRange {
            index: r as u64,
            size: spec.s_stage as u64,
        });
    }
    if j >= spec.n_stage {
        return Err(Error::IndexOutOfRange {
            index: j as u64,
            size: spec.n_stage as u64,
        });
    }
    Ok(StageMap::decode(spec, tape)?.entry_unchecked(r, j))
}

pub fn entry(plan: &JlPlan, tape: &SeedTape, q: EntryQuery) -> Result<f64> {
    entry_with_stats(plan, tape, q).map(|(v, _)| v)
}

pub fn entry_with_stats(plan: &JlPlan, tape: &SeedTape, q: EntryQuery) -> Result<(f64, EntryStats)> {
    let g = JlMatrix::new(plan, tape)?;
    entry_of(&g, q.row, q.col)
}

pub(crate) fn entry_of(g: &JlMatrix<'_>, row: usize, col: usize) -> Result<(f64, EntryStats)> {
    let plan = g.plan();
    if row >= plan.s_out {
        return Err(Error::IndexOutOfRange {
            index: row as u64,
            size: plan.s_out as u64,
        });
    }
    if col >= plan.n_input {
        return Err(Error::IndexOutOfRange {
            index: col as u64,
            size: plan.n_input as u64,
        });
    }
    let stages = g.stages();
    let tail = g.tail();
    let t = stages.len();
    if t == 0 {
        let v = tail.sign(row, col) / (plan.s_out as f64).sqrt();
        return Ok((
            v,
            EntryStats {
                live_cells: 1,
                terms: 1,
            },
        ));
    }

    let tail_scale = 1.0 / (plan.s_out as f64).sqrt();
    // Level l (1..=t) is stored at l - 1. counter[l-1] = i_l in [s_{l-1}],
    // prefix[l-1] = product of the factors fixed by levels >= l,
    // selected[l-1] = S_l[i_{l+1}] (unused at l = t).
    let mut counter = vec![0usize; t];
    let mut prefix = vec![0.0f64; t];
    let mut selected = vec![0usize; t];
    let mut acc = CompensatedSum::default();
    let mut terms = 0u64;
    let live_cells = counter.len() + prefix.len() + selected.len() + 2;

    let range = |l: usize| stages[l - 1].spec.s_stage;
    // Factor that level l contributes given i_{l+1} (via `selected`) and i_l.
    let factor = |l: usize, selected: &[usize], i_l: usize| -> f64 {
        if l == t {
            tail.sign(row, i_l) * tail_scale
        } else {
            stages[l].entry_with_selected(selected[l - 1], i_l)
        }
    };
    let fill = |from: usize, counter: &[usize], prefix: &mut [f64], selected: &mut [usize]| {
        // Recompute levels from..=1 after counter[from - 1] changed.
        for l in (1..=from).rev() {
            let above = if l == t { 1.0 } else { prefix[l] };
            prefix[l - 1] = above * factor(l, selected, counter[l - 1]);
            if l > 1 {
                selected[l - 2] = stages[l - 1].selected(counter[l - 1]);
            }
        }
    };

    fill(t, &counter, &mut prefix, &mut selected);
    loop {
        let i1 = counter[0];
        acc.add(prefix[0] * stages[0].entry_unchecked(i1, col));
        terms += 1;

        let mut l = 1;
        loop {
            counter[l - 1] += 1;
            if counter[l - 1] < range(l) {
                break;
            }
            counter[l - 1] = 0;
            l += 1;
            if l > t {
                return Ok((acc.value(), EntryStats { live_cells, terms }));
            }
        }
        fill(l, &counter, &mut prefix, &mut selected);
    }
}
