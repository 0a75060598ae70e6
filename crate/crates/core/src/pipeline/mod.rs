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

//! Plan construction and application.

mod apply;
mod plan;

pub use apply::{cw_apply, generate_apply, pad_input, stage_apply, JlMatrix, StageMap, TailMap};
pub use plan::{
    plan_build, regularity_bound, seed_length_bound, stage_count_cap, Constants, JlPlan, KSchedule,
    StageRule, StageSpec, TailSpec, MAX_PADDED_LOG2,
};
