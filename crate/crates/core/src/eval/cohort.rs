use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphSummary;
use crate::radiomics::percentile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub group: String,
    pub statistic: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn group_name(label: u8) -> &'static str {
    if label == 1 {
        "patient"
    } else {
        "control"
    }
}

const STATISTICS: [&str; 3] = ["num_edges", "num_active_nodes", "avg_edge_weight"];

fn stat(s: &GraphSummary, i: usize) -> f64 {
    match i {
        0 => s.num_edges as f64,
        1 => s.num_active_nodes as f64,
        _ => s.avg_edge_weight,
    }
}

/// Five-number summaries per group (control, patient) and statistic.
pub fn cohort_graph_report(subjects: &[(GraphSummary, u8)]) -> Result<Vec<Distribution>> {
    let mut out = Vec::new();
    for label in [0u8, 1] {
        let group: Vec<&GraphSummary> = subjects
            .iter()
            .filter(|s| s.1 == label)
            .map(|s| &s.0)
            .collect();
        if group.is_empty() {
            return Err(Error::EmptyGroup(group_name(label).into()));
        }
        for (i, name) in STATISTICS.iter().enumerate() {
            let mut v: Vec<f64> = group.iter().map(|s| stat(s, i)).collect();
            v.sort_by(f64::total_cmp);
            out.push(Distribution {
                group: group_name(label).into(),
                statistic: name.to_string(),
                n: v.len(),
                min: v[0],
                q1: percentile(&v, 25.0),
                median: percentile(&v, 50.0),
                q3: percentile(&v, 75.0),
                max: v[v.len() - 1],
            });
        }
    }
    Ok(out)
}

/// Tidy CSV with a leading `region` column.
pub fn write_cohort_csv<W: Write>(rows: &[(String, Vec<Distribution>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "region",
        "group",
        "statistic",
        "n",
        "min",
        "q1",
        "median",
        "q3",
        "max",
    ])?;
    for (region, dists) in rows {
        for d in dists {
            w.write_record([
                region.clone(),
                d.group.clone(),
                d.statistic.clone(),
                d.n.to_string(),
                d.min.to_string(),
                d.q1.to_string(),
                d.median.to_string(),
                d.q3.to_string(),
                d.max.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<cohort report>", e))
}
