//! Optimality-gap evaluation of the three decoders and its CSV forms.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::dataset::LabeledSample;
use crate::decoder::{baseline_decode, greedy_decode, naive_decode, optimality_gap, Gap};
use crate::error::{Error, Result};
use crate::gcn::predict;
use crate::instance::build_knn;
use crate::model::ModelParams;

pub const GAP_REPORT_COLUMNS: [&str; 8] = [
    "instance_id",
    "z_star",
    "z_naive",
    "gap_naive",
    "z_greedy",
    "gap_greedy",
    "z_baseline",
    "gap_baseline",
];

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub instance_id: u64,
    pub z_star: f64,
    pub z_naive: f64,
    pub gap_naive: Gap,
    pub z_greedy: f64,
    pub gap_greedy: Gap,
    pub z_baseline: f64,
    pub gap_baseline: Gap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSummary {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

impl GapSummary {
    fn of(mut values: Vec<f64>) -> Self {
        if values.is_empty() {
            return GapSummary {
                mean: f64::NAN,
                median: f64::NAN,
                max: f64::NAN,
            };
        }
        values.sort_by(f64::total_cmp);
        let len = values.len();
        let median = if len % 2 == 1 {
            values[len / 2]
        } else {
            0.5 * (values[len / 2 - 1] + values[len / 2])
        };
        GapSummary {
            mean: values.iter().sum::<f64>() / len as f64,
            median,
            max: values[len - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
}

impl GapReport {
    pub fn naive(&self) -> GapSummary {
        GapSummary::of(self.rows.iter().map(|r| r.gap_naive.value()).collect())
    }

    pub fn greedy(&self) -> GapSummary {
        GapSummary::of(self.rows.iter().map(|r| r.gap_greedy.value()).collect())
    }

    pub fn baseline(&self) -> GapSummary {
        GapSummary::of(self.rows.iter().map(|r| r.gap_baseline.value()).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(GAP_REPORT_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.instance_id.to_string(),
                r.z_star.to_string(),
                r.z_naive.to_string(),
                r.gap_naive.to_string(),
                r.z_greedy.to_string(),
                r.gap_greedy.to_string(),
                r.z_baseline.to_string(),
                r.gap_baseline.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(GAP_REPORT_COLUMNS) {
            return Err(Error::InvalidInstance(format!(
                "unexpected gap report header {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| {
                    Error::InvalidInstance(format!("column {}: {e}", GAP_REPORT_COLUMNS[i]))
                })
            };
            let gap = |i: usize| -> Result<Gap> {
                if &rec[i] == "inf" {
                    Ok(Gap::Infinite)
                } else {
                    num(i).map(Gap::Percent)
                }
            };
            rows.push(GapRow {
                instance_id: rec[0]
                    .parse()
                    .map_err(|e| Error::InvalidInstance(format!("column instance_id: {e}")))?,
                z_star: num(1)?,
                z_naive: num(2)?,
                gap_naive: gap(3)?,
                z_greedy: num(4)?,
                gap_greedy: gap(5)?,
                z_baseline: num(6)?,
                gap_baseline: gap(7)?,
            });
        }
        Ok(GapReport { rows })
    }

    /// Each strategy's gaps sorted ascending, as `rank,naive,greedy,baseline`
    /// rows (rank starts at 1).
    pub fn write_plot_csv<W: Write>(&self, out: W) -> Result<()> {
        let sorted = |f: fn(&GapRow) -> Gap| {
            let mut v: Vec<f64> = self.rows.iter().map(|r| f(r).value()).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let naive = sorted(|r| r.gap_naive);
        let greedy = sorted(|r| r.gap_greedy);
        let baseline = sorted(|r| r.gap_baseline);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "gap_naive", "gap_greedy", "gap_baseline"])?;
        for i in 0..self.rows.len() {
            w.write_record([
                (i + 1).to_string(),
                naive[i].to_string(),
                greedy[i].to_string(),
                baseline[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates a trained model. The baseline decoder for an instance uses
/// seed `seed + instance_id`.
pub fn evaluate(params: &ModelParams, testset: &[LabeledSample], seed: u64) -> Result<GapReport> {
    let k = params.config().k;
    evaluate_with(testset, seed, |s| {
        let knn = build_knn(&s.instance, k)?;
        predict(params, &s.instance, &knn)
    })
}

/// Evaluates an arbitrary probability source.
pub fn evaluate_with<F>(testset: &[LabeledSample], seed: u64, probs_of: F) -> Result<GapReport>
where
    F: Fn(&LabeledSample) -> Result<Vec<f64>> + Sync,
{
    let rows = testset
        .par_iter()
        .map(|s| {
            let inst = &s.instance;
            let p = inst.p();
            let probs = probs_of(s)?;
            let naive = naive_decode(inst, &probs, p)?;
            let greedy = greedy_decode(inst, &probs, p)?;
            let base = baseline_decode(inst, p, seed.wrapping_add(inst.id()))?;
            Ok(GapRow {
                instance_id: inst.id(),
                z_star: s.z_star,
                z_naive: naive.objective,
                gap_naive: optimality_gap(naive.objective, s.z_star),
                z_greedy: greedy.objective,
                gap_greedy: optimality_gap(greedy.objective, s.z_star),
                z_baseline: base.objective,
                gap_baseline: optimality_gap(base.objective, s.z_star),
            })
        })
        .collect::<Result<_>>()?;
    Ok(GapReport { rows })
}
