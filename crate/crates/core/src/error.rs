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

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("seed too short: need {needed} bits, got {got}")]
    BitsTooShort { needed: usize, got: usize },

    #[error("index {index} out of range (domain size {size})")]
    IndexOutOfRange { index: u64, size: u64 },

    #[error("length {got} is not a power of two")]
    NonPowerOfTwoLength { got: usize },

    #[error("sign tape covers {domain} positions, need {needed}")]
    SignDomainTooSmall { domain: u64, needed: u64 },

    #[error("degenerate sampler request: subset size {s} >= domain {n}")]
    DegenerateRequest { s: usize, n: usize },

    #[error("family of 2^{index_bits} members exceeds the enumeration cap of 2^{cap}")]
    FamilyTooLargeToEnumerate { index_bits: usize, cap: usize },

    #[error("function value {value} at {index} outside [0, {bound}]")]
    RangeViolation { index: usize, value: f64, bound: f64 },

    #[error("seed space of 2^{bits} tapes exceeds the enumeration cap of 2^{cap}")]
    SeedSpaceTooLarge { bits: usize, cap: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("field of degree {0} is not supported (1..=64)")]
    UnsupportedField(u32),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("plan hash mismatch: expected {expected}, found {found}")]
    PlanMismatch { expected: String, found: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
