//! Labelled datasets stored as JSON lines.
//!
//! One object per line:
//! `{"id":…,"n":…,"p":…,"coords":[[x,y],…],"z_star":…,"labels":[0,1,…]}`

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_solver::solve_exact;
use crate::instance::{generate_instance, Instance, Solution};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub instance: Instance,
    pub z_star: f64,
    pub labels: Vec<u8>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabeledRecord {
    id: u64,
    n: usize,
    p: usize,
    coords: Vec<[i32; 2]>,
    z_star: f64,
    labels: Vec<u8>,
}

impl LabeledSample {
    pub fn label(instance: Instance) -> Result<Self> {
        let cert = solve_exact(&instance)?;
        Ok(LabeledSample {
            instance,
            z_star: cert.z_star,
            labels: cert.labels,
        })
    }

    /// The labelled solution as a vertex set.
    pub fn solution(&self) -> Solution {
        Solution::new(
            self.labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == 1)
                .map(|(i, _)| i),
        )
    }

    fn from_record(rec: LabeledRecord) -> Result<Self> {
        let instance = Instance::try_from(crate::instance::InstanceRecord {
            id: rec.id,
            n: rec.n,
            p: rec.p,
            coords: rec.coords,
        })?;
        if rec.labels.len() != rec.n {
            return Err(Error::LengthMismatch {
                expected: rec.n,
                got: rec.labels.len(),
            });
        }
        if rec.labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidInstance("labels must be 0 or 1".into()));
        }
        let ones = rec.labels.iter().filter(|&&l| l == 1).count();
        if ones != rec.p {
            return Err(Error::InvalidInstance(format!(
                "instance {} has {ones} positive labels, expected p = {}",
                rec.id, rec.p
            )));
        }
        if !(rec.z_star.is_finite() && rec.z_star >= 0.0) {
            return Err(Error::InvalidInstance(format!(
                "instance {} has invalid z_star {}",
                rec.id, rec.z_star
            )));
        }
        Ok(LabeledSample {
            instance,
            z_star: rec.z_star,
            labels: rec.labels,
        })
    }

    fn to_record(&self) -> LabeledRecord {
        let inst = self.instance.to_record();
        LabeledRecord {
            id: inst.id,
            n: inst.n,
            p: inst.p,
            coords: inst.coords,
            z_star: self.z_star,
            labels: self.labels.clone(),
        }
    }
}

/// Generates and labels `count` instances; instance `i` uses seed
/// `base_seed + i`. Labelling runs in parallel; output order is by index.
pub fn build_dataset(
    count: usize,
    n: usize,
    p: usize,
    base_seed: u64,
) -> Result<Vec<LabeledSample>> {
    if count == 0 {
        return Err(Error::InvalidConfig(
            "dataset count must be at least 1".into(),
        ));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| LabeledSample::label(generate_instance(n, p, base_seed.wrapping_add(i))?))
        .collect()
}

pub fn write_jsonl<W: Write>(samples: &[LabeledSample], mut out: W) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, &s.to_record()).map_err(|source| Error::Json {
            context: format!("writing instance {}", s.instance.id()),
            source,
        })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads labelled samples; blank lines are skipped.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<LabeledSample>> {
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledRecord = serde_json::from_str(&line).map_err(|source| Error::Json {
            context: format!("line {}", lineno + 1),
            source,
        })?;
        out.push(LabeledSample::from_record(rec)?);
    }
    Ok(out)
}

/// Reads bare instances (labels and `z_star` are ignored if present).
pub fn read_instances<R: BufRead>(input: R) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: Instance = serde_json::from_str(&line).map_err(|source| Error::Json {
            context: format!("line {}", lineno + 1),
            source,
        })?;
        out.push(inst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_dataset_contract() {
        let ds = build_dataset(3, 12, 3, 100).unwrap();
        assert_eq!(ds.len(), 3);
        for (i, s) in ds.iter().enumerate() {
            assert_eq!(s.instance.id(), 100 + i as u64);
            assert_eq!(s.labels.len(), 12);
            assert_eq!(s.labels.iter().map(|&l| l as usize).sum::<usize>(), 3);
            assert_eq!(s.instance.objective(&s.solution()).unwrap(), s.z_star);
        }
    }

    #[test]
    fn jsonl_roundtrip() {
        let ds = build_dataset(4, 9, 2, 7).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text
            .lines()
            .all(|l| l.contains("\"z_star\":") && l.contains("\"labels\":[")));
        assert_eq!(read_jsonl(&buf[..]).unwrap(), ds);
        assert_eq!(read_instances(&buf[..]).unwrap()[2], ds[2].instance);
    }

    #[test]
    fn rejects_inconsistent_labels() {
        let bad = r#"{"id":1,"n":2,"p":1,"coords":[[0,0],[1,1]],"z_star":1.4,"labels":[1,1]}"#;
        assert!(read_jsonl(bad.as_bytes()).is_err());
        let short = r#"{"id":1,"n":2,"p":1,"coords":[[0,0],[1,1]],"z_star":1.4,"labels":[1]}"#;
        assert!(read_jsonl(short.as_bytes()).is_err());
        assert!(read_jsonl("not json".as_bytes()).is_err());
    }
}
