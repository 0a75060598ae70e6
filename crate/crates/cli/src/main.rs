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

//! `djl`: plans, embedding, entry queries and audits from the command line.
//!
//! Exit status: 0 on success or a passing audit, 1 when an audit fails,
//! 2 on usage and input errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "djl", version, about = "Explicit Johnson-Lindenstrauss generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a plan and print its schedule.
    Plan(PlanArgs),
    /// Apply the map selected by a seed to a file of vectors.
    Embed(EmbedArgs),
    /// Print one matrix entry.
    Entry(EntryArgs),
    /// Monte Carlo distortion audit over the corpus or a vector file.
    Audit(AuditArgs),
    /// Check an averaging sampler family against the function corpus.
    SamplerAudit(SamplerAuditArgs),
    /// Measure how often one sign-and-rotate layer leaves a vector spiky.
    RegularityAudit(RegularityAuditArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    /// Length-prefixed little-endian f64 records.
    Binary,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Schedule {
    Geometric,
    Literal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rule {
    MaxFeasible,
    MinSeed,
}

/// Overrides for the construction constants; unset ones keep their defaults.
#[derive(Debug, Args)]
struct ConstantArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    cw_rows: Option<f64>,
    #[arg(long)]
    cw_independence: Option<f64>,
    #[arg(long)]
    c_samp: Option<f64>,
    #[arg(long)]
    c_k: Option<f64>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    c_r: Option<f64>,
    #[arg(long, value_enum)]
    k_schedule: Option<Schedule>,
    #[arg(long, value_enum)]
    stage_rule: Option<Rule>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[command(flatten)]
    constants: ConstantArgs,
    /// Where to write the plan.
    #[arg(long, default_value = "plan.json")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Seed as hex, exactly enough bytes for the plan. Drawn from the system
    /// entropy source (and printed) when omitted.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    format: Format,
}

#[derive(Debug, Args)]
struct EntryArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    seed: String,
    #[arg(long)]
    row: usize,
    #[arg(long)]
    col: usize,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Vectors to audit instead of the built-in corpus.
    #[arg(long)]
    vectors: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "binary")]
    format: Format,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Key for the trial streams, as hex.
    #[arg(long, default_value = "00")]
    rng_seed: String,
    /// Directory for the per-vector report and histogram files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SamplerAuditArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    bound: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    c_samp: Option<f64>,
    #[arg(long)]
    c_k: Option<f64>,
    /// Members to sample when the family is too large to enumerate.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Write the per-function results as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegularityAuditArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    alpha: f64,
    /// Seeds tape sampling when the tape space is too large to enumerate.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => commands::plan(a),
        Command::Embed(a) => commands::embed(a),
        Command::Entry(a) => commands::entry(a),
        Command::Audit(a) => commands::audit(a),
        Command::SamplerAudit(a) => commands::sampler_audit(a),
        Command::RegularityAudit(a) => commands::regularity_audit(a),
    };
    match result {
        Ok(commands::Outcome::Pass) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
