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

//! Audits: i.i.d. baseline, Monte Carlo distortion, regularity and exact
//! small-instance enumeration.

pub mod corpus;
pub mod exhaustive;
pub mod regularity;
pub mod stats;
pub mod trials;

pub use exhaustive::{exhaustive_audit, ExhaustiveReport};
pub use regularity::{exceed_profile, regularity_audit, RegularityReport};
pub use stats::{wilson_interval, Z_99};
pub use trials::{baseline_apply, distortion_audit, AuditReport, RateEstimate};
