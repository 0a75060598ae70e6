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

//! Vector files.
//!
//! Binary: the magic `DJLVEC01`, a 32-byte plan hash (all zero when the file
//! is not tied to a plan), then records of a `u64` little-endian length
//! followed by that many little-endian `f64`s.
//!
//! CSV: an optional `# plan_hash=<hex>` line, then one vector per line.
//! Values are written in shortest round-trip form, so CSV is also lossless.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DJLVEC01";
const HASH_PREFIX: &str = "# plan_hash=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VecFormat {
    Binary,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorFile {
    pub plan_hash: Option<[u8; 32]>,
    pub vectors: Vec<Vec<f64>>,
}

impl VectorFile {
    /// Fails when the file is bound to a plan other than `expected`.
    pub fn check_plan(&self, expected: &[u8; 32]) -> Result<()> {
        match &self.plan_hash {
            Some(h) if h != expected => Err(Error::PlanMismatch {
                expected: hex::encode(expected),
                found: hex::encode(h),
            }),
            _ => Ok(()),
        }
    }
}

pub fn write_vectors<W: Write>(
    mut out: W,
    format: VecFormat,
    plan_hash: Option<&[u8; 32]>,
    vectors: &[Vec<f64>],
) -> Result<()> {
    match format {
        VecFormat::Binary => {
            out.write_all(MAGIC)?;
            out.write_all(plan_hash.unwrap_or(&[0; 32]))?;
            for v in vectors {
                out.write_all(&(v.len() as u64).to_le_bytes())?;
                for x in v {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
        }
        VecFormat::Csv => {
            if let Some(h) = plan_hash {
                writeln!(out, "{HASH_PREFIX}{}", hex::encode(h))?;
            }
            for v in vectors {
                let line: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_vectors<R: Read>(input: R, format: VecFormat) -> Result<VectorFile> {
    match format {
        VecFormat::Binary => read_binary(input),
        VecFormat::Csv => read_csv(input),
    }
}

fn read_binary<R: Read>(mut input: R) -> Result<VectorFile> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    if data.len() < 40 || &data[..8] != MAGIC {
        return Err(Error::Malformed(
            "binary vector file lacks the DJLVEC01 header".into(),
        ));
    }
    let mut hash = [0u8; 32];
    hash.copy_from_slice(&data[8..40]);
    let plan_hash = (hash != [0; 32]).then_some(hash);
    let mut rest = &data[40..];
    let mut vectors = Vec::new();
    while !rest.is_empty() {
        if rest.len() < 8 {
            return Err(Error::Malformed("truncated record length".into()));
        }
        let len = u64::from_le_bytes(rest[..8].try_into().expect("8 bytes"));
        rest = &rest[8..];
        let bytes = usize::try_from(len)
            .ok()
            .and_then(|l| l.checked_mul(8))
            .filter(|&b| b <= rest.len())
            .ok_or_else(|| Error::Malformed(format!("record of length {len} overruns the file")))?;
        vectors.push(
            rest[..bytes]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
        );
        rest = &rest[bytes..];
    }
    Ok(VectorFile { plan_hash, vectors })
}

fn read_csv<R: Read>(input: R) -> Result<VectorFile> {
    let mut file = VectorFile::default();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if let Some(h) = line.strip_prefix(HASH_PREFIX) {
            let bytes = hex::decode(h.trim()).map_err(|e| Error::Malformed(format!("plan hash: {e}")))?;
            let hash: [u8; 32] = bytes
                .try_into()
                .map_err(|_| Error::Malformed("plan hash must be 32 bytes".into()))?;
            file.plan_hash = Some(hash);
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Malformed(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        file.vectors.push(v);
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(format: VecFormat, hash: Option<&[u8; 32]>, vs: &[Vec<f64>]) -> VectorFile {
        let mut buf = Vec::new();
        write_vectors(&mut buf, format, hash, vs).unwrap();
        read_vectors(&buf[..], format).unwrap()
    }

    #[test]
    fn binary_layout() {
        let mut buf = Vec::new();
        write_vectors(&mut buf, VecFormat::Binary, Some(&[7; 32]), &[vec![1.0, -0.5]]).unwrap();
        assert_eq!(&buf[..8], b"DJLVEC01");
        assert_eq!(&buf[8..40], &[7; 32]);
        assert_eq!(&buf[40..48], &2u64.to_le_bytes());
        assert_eq!(&buf[48..56], &1.0f64.to_le_bytes());
        assert_eq!(buf.len(), 64);
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_vectors(&mut buf, VecFormat::Csv, Some(&[0xab; 32]), &[vec![0.1, 2.0]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("# plan_hash={}\n0.1,2.0\n", "ab".repeat(32)));
    }

    #[test]
    fn plan_mismatch_detected() {
        let f = roundtrip(VecFormat::Binary, Some(&[1; 32]), &[vec![0.0]]);
        assert!(f.check_plan(&[1; 32]).is_ok());
        assert!(matches!(f.check_plan(&[2; 32]), Err(Error::PlanMismatch { .. })));
        let unbound = roundtrip(VecFormat::Csv, None, &[vec![0.0]]);
        assert!(unbound.check_plan(&[2; 32]).is_ok());
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_vectors(&b"nope"[..], VecFormat::Binary).is_err());
        let mut buf = Vec::new();
        write_vectors(&mut buf, VecFormat::Binary, None, &[vec![1.0, 2.0]]).unwrap();
        buf.pop();
        assert!(read_vectors(&buf[..], VecFormat::Binary).is_err());
        assert!(read_vectors(&b"1.0,x\n"[..], VecFormat::Csv).is_err());
    }

    proptest! {
        #[test]
        fn lossless(vs in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..20), 0..6)) {
            for format in [VecFormat::Binary, VecFormat::Csv] {
                let f = roundtrip(format, Some(&[3; 32]), &vs);
                let expect: Vec<Vec<f64>> = if format == VecFormat::Csv {
                    vs.iter().filter(|v| !v.is_empty()).cloned().collect()
                } else {
                    vs.clone()
                };
                prop_assert_eq!(f.vectors.len(), expect.len());
                for (a, b) in f.vectors.iter().zip(&expect) {
                    prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
                    prop_assert_eq!(a.len(), b.len());
                }
            }
        }
    }
}
