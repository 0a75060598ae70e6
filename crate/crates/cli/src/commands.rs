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

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use djl_core::access::{entry_with_stats, EntryQuery};
use djl_core::audit::{self, corpus, distortion_audit};
use djl_core::pipeline::{generate_apply, plan_build, Constants, JlPlan, KSchedule, StageRule};
use djl_core::sampler::{self, family_build, SamplerConstants, ENUMERATION_CAP_BITS};
use djl_core::tape::{tape_partition, BitString, SeedTape};
use djl_core::vecio::{read_vectors, write_vectors, VecFormat};
use djl_core::{Error, Result};
use rayon::prelude::*;
use serde_json::json;

use crate::{
    AuditArgs, ConstantArgs, EmbedArgs, EntryArgs, Format, PlanArgs, RegularityAuditArgs, Rule,
    SamplerAuditArgs, Schedule,
};

pub enum Outcome {
    Pass,
    Fail,
}

impl From<bool> for Outcome {
    fn from(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

impl From<Format> for VecFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Binary => VecFormat::Binary,
            Format::Csv => VecFormat::Csv,
        }
    }
}

fn sampler_constants(c_samp: Option<f64>, c_k: Option<f64>) -> SamplerConstants {
    let d = SamplerConstants::default();
    SamplerConstants {
        c_samp: c_samp.unwrap_or(d.c_samp),
        c_k: c_k.unwrap_or(d.c_k),
    }
}

fn constants(a: &ConstantArgs) -> Constants {
    let d = Constants::default();
    Constants {
        c: a.c.unwrap_or(d.c),
        cw_rows: a.cw_rows.unwrap_or(d.cw_rows),
        cw_independence: a.cw_independence.unwrap_or(d.cw_independence),
        sampler: sampler_constants(a.c_samp, a.c_k),
        budget: a.budget.unwrap_or(d.budget),
        k_schedule: match a.k_schedule {
            Some(Schedule::Geometric) => KSchedule::Geometric,
            Some(Schedule::Literal) => KSchedule::Literal,
            None => d.k_schedule,
        },
        stage_rule: match a.stage_rule {
            Some(Rule::MaxFeasible) => StageRule::MaxFeasible,
            Some(Rule::MinSeed) => StageRule::MinSeed,
            None => d.stage_rule,
        },
        c_r: a.c_r.unwrap_or(d.c_r),
    }
}

fn load_plan(path: &Path) -> Result<JlPlan> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    JlPlan::from_json(&text)
}

/// Parses a seed that must hold exactly the plan's seed bytes.
fn parse_seed(plan: &JlPlan, hex_seed: &str) -> Result<SeedTape> {
    let bits = BitString::from_hex(hex_seed)?;
    let want = plan.seed_bytes();
    let got = bits.as_bytes().len();
    if got < want {
        return Err(Error::BitsTooShort {
            needed: plan.seed_length_bits,
            got: bits.len(),
        });
    }
    if got > want {
        return Err(Error::InvalidParams(format!(
            "seed has {got} bytes; this plan takes exactly {want} ({} bits)",
            plan.seed_length_bits
        )));
    }
    tape_partition(plan, &bits)
}

fn entropy_seed(plan: &JlPlan) -> String {
    use rand::RngCore;
    let mut bytes = vec![0u8; plan.seed_bytes()];
    rand::rngs::OsRng.fill_bytes(&mut bytes);
    hex::encode(bytes)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn plan(a: PlanArgs) -> Result<Outcome> {
    let consts = constants(&a.constants);
    consts.validate()?;
    let plan = plan_build(a.n, a.eps, a.delta, &consts)?;
    write_file(&a.out, &plan.to_json())?;
    print!("{}", schedule_table(&plan));
    println!("wrote {}", a.out.display());
    Ok(Outcome::Pass)
}

fn schedule_table(plan: &JlPlan) -> String {
    let mut s = String::new();
    s += &format!("plan {}\n", plan.hash());
    s += &format!(
        "n = {} (padded {}), eps = {}, delta = {}\n",
        plan.n_input, plan.n_padded, plan.eps, plan.delta
    );
    s += &format!(
        "t = {}, eps_unit = {:.6}, delta_unit = {:.3e}, k0 = {}\n",
        plan.t, plan.eps_unit, plan.delta_unit, plan.k0
    );
    s += &format!(
        "{:>6} {:>12} {:>6} {:>10} {:>10} {:>12}\n",
        "stage", "n_i", "k_i", "s_i", "sign_bits", "sampler_bits"
    );
    for st in &plan.stages {
        s += &format!(
            "{:>6} {:>12} {:>6} {:>10} {:>10} {:>12}\n",
            st.index,
            st.n_stage,
            st.k,
            st.s_stage,
            st.sign_bits,
            st.sampler_bits()
        );
    }
    s += &format!(
        "{:>6} {:>12} {:>6} {:>10} {:>10} {:>12}\n",
        "tail", plan.tail.m_in, plan.tail.k_cw, plan.tail.s_out, plan.tail.sign_bits, "-"
    );
    s += &format!(
        "seed_length_bits = {} (bound {:.1} with c_r = {}; i.i.d. signs need {})\n",
        plan.seed_length_bits,
        plan.seed_length_bound,
        plan.constants.c_r,
        plan.iid_seed_bits()
    );
    s += &format!(
        "union bound: distortion within [-{:.4}, +{:.4}] except with probability <= {:.3e}\n",
        plan.composed_eps_lower, plan.composed_eps_upper, plan.composed_delta
    );
    s
}

pub fn embed(a: EmbedArgs) -> Result<Outcome> {
    let plan = load_plan(&a.plan)?;
    let seed = match a.seed {
        Some(s) => s,
        None => {
            let s = entropy_seed(&plan);
            eprintln!("seed {s}");
            s
        }
    };
    let tape = parse_seed(&plan, &seed)?;
    let hash = plan.hash_bytes();
    let input = File::open(&a.input).map_err(|e| Error::Io(format!("{}: {e}", a.input.display())))?;
    let file = read_vectors(BufReader::new(input), a.format.into())?;
    file.check_plan(&hash)?;
    let out: Vec<Vec<f64>> = file
        .vectors
        .par_iter()
        .map(|w| generate_apply(&plan, &tape, w))
        .collect::<Result<_>>()?;
    let sink = File::create(&a.output).map_err(|e| Error::Io(format!("{}: {e}", a.output.display())))?;
    let mut sink = BufWriter::new(sink);
    write_vectors(&mut sink, a.format.into(), Some(&hash), &out)?;
    sink.flush()?;
    Ok(Outcome::Pass)
}

pub fn entry(a: EntryArgs) -> Result<Outcome> {
    let plan = load_plan(&a.plan)?;
    let tape = parse_seed(&plan, &a.seed)?;
    let (value, _) = entry_with_stats(
        &plan,
        &tape,
        EntryQuery {
            row: a.row,
            col: a.col,
        },
    )?;
    println!("{value:?}");
    Ok(Outcome::Pass)
}

pub fn audit(a: AuditArgs) -> Result<Outcome> {
    let plan = load_plan(&a.plan)?;
    let rng_seed = hex::decode(a.rng_seed.trim().trim_start_matches("0x"))
        .map_err(|e| Error::InvalidParams(format!("rng seed hex: {e}")))?;
    let vectors: Vec<(String, Vec<f64>)> = match &a.vectors {
        Some(path) => {
            let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let file = read_vectors(BufReader::new(f), a.format.into())?;
            file.check_plan(&plan.hash_bytes())?;
            file.vectors
                .into_iter()
                .enumerate()
                .map(|(i, v)| (format!("vector_{i}"), v))
                .collect()
        }
        None => corpus::distortion_corpus(plan.n_input)
            .into_iter()
            .map(|c| (c.name, c.values))
            .collect(),
    };
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    println!(
        "{:<18} {:>9} {:>9} {:>9} {:>9}  result",
        "vector", "rate", "ci_high", "baseline", "stage"
    );
    let mut all_pass = true;
    for (name, w) in &vectors {
        let report = distortion_audit(&plan, name, w, a.trials, &rng_seed)?;
        println!(
            "{:<18} {:>9.5} {:>9.5} {:>9.5} {:>9.5}  {}",
            name,
            report.failure.rate,
            report.failure.ci_high,
            report.baseline_failure.rate,
            report.stage_failure.rate,
            if report.pass { "PASS" } else { "FAIL" }
        );
        all_pass &= report.pass;
        if let Some(dir) = &a.out_dir {
            write_file(&dir.join(format!("{name}.json")), &report.to_json())?;
            write_file(
                &dir.join(format!("{name}.histogram.csv")),
                &report.histogram_csv(),
            )?;
        }
    }
    println!(
        "delta = {}: {}",
        plan.delta,
        if all_pass { "PASS" } else { "FAIL" }
    );
    Ok(all_pass.into())
}

pub fn sampler_audit(a: SamplerAuditArgs) -> Result<Outcome> {
    let consts = sampler_constants(a.c_samp, a.c_k);
    let family = family_build(a.n, a.bound, a.eps, a.delta, &consts)?;
    let exhaustive = family.index_bits <= ENUMERATION_CAP_BITS;
    println!(
        "domain {} s = {} k = {} index_bits = {} ({})",
        family.n,
        family.s,
        family.k,
        family.index_bits,
        if exhaustive {
            "enumerated".to_string()
        } else {
            format!("{} sampled members", a.samples)
        }
    );
    let mut results = Vec::new();
    let mut all_pass = true;
    for (name, f) in corpus::function_corpus(family.n, a.bound) {
        let rate = if exhaustive {
            sampler::sampler_audit(&family, &f)?
        } else {
            sampler::sampler_audit_sampled(&family, &f, a.samples, a.rng_seed)?
        };
        let pass = rate <= a.delta;
        all_pass &= pass;
        println!("{name:<18} {rate:>9.5}  {}", if pass { "PASS" } else { "FAIL" });
        results.push(json!({ "function": name, "failure_fraction": rate, "pass": pass }));
    }
    if let Some(out) = &a.out {
        let doc = json!({ "family": family, "exhaustive": exhaustive, "results": results });
        write_file(
            out,
            &format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializes")),
        )?;
    }
    println!("delta = {}: {}", a.delta, if all_pass { "PASS" } else { "FAIL" });
    Ok(all_pass.into())
}

pub fn regularity_audit(a: RegularityAuditArgs) -> Result<Outcome> {
    let mut reports = Vec::new();
    let mut all_pass = true;
    for c in corpus::distortion_corpus(a.n) {
        let r = audit::regularity_audit(a.n, a.k, &c.values, a.alpha, a.rng_seed)?;
        println!(
            "{:<18} exceed {:>9.5} bound {:>9.4}{}  {}",
            c.name,
            r.exceed_rate,
            r.bound,
            if r.bound_checked { "" } else { " (vacuous)" },
            if r.pass { "PASS" } else { "FAIL" }
        );
        all_pass &= r.pass;
        reports.push(json!({ "vector": c.name, "report": r }));
    }
    if let Some(out) = &a.out {
        write_file(
            out,
            &format!(
                "{}\n",
                serde_json::to_string_pretty(&reports).expect("serializes")
            ),
        )?;
    }
    Ok(all_pass.into())
}
