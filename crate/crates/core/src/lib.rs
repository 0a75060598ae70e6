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

//! Explicit Johnson-Lindenstrauss generator.
//!
//! A short seed selects a linear map `G(y): R^n -> R^s` with
//! `s = O(log(1/delta)/eps^2)` such that for every fixed unit vector `w`,
//! `| |G(y)w|^2 - 1 | <= eps` except for a `delta` fraction of seeds. The map
//! is a cascade of stages `sqrt(n/s) P_S H D(x)` (k-wise independent signs
//! `x`, a Hadamard rotation `H`, and a coordinate sample `S` from an explicit
//! averaging sampler), followed by a sign matrix with limited independence.
//!
//! ```
//! use djl_core::{pipeline::{plan_build, generate_apply, Constants}, tape::{tape_partition, BitString}};
//!
//! let plan = plan_build(64, 0.5, 0.1, &Constants::default()).unwrap();
//! let seed = BitString::from_bytes(vec![0x5a; plan.seed_bytes()]);
//! let tape = tape_partition(&plan, &seed).unwrap();
//! let mut w = vec![0.0; 64];
//! w[3] = 1.0;
//! let out = generate_apply(&plan, &tape, &w).unwrap();
//! assert_eq!(out.len(), plan.s_out);
//! ```

pub mod access;
pub mod audit;
pub mod error;
pub mod field;
pub mod hadamard;
pub mod pipeline;
pub mod sampler;
pub mod tape;
pub mod vecio;

pub use error::{Error, Result};
