use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::radiomics::FeatureRow;

/// Named real feature columns for a set of labelled subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub subject_ids: Vec<String>,
    pub labels: Vec<u8>,
    /// Row-major; every row has `feature_names.len()` values.
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn new(
        feature_names: Vec<String>,
        subject_ids: Vec<String>,
        labels: Vec<u8>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::SchemaMismatch(format!(
                "duplicate feature name {dup:?}"
            )));
        }
        if subject_ids.len() != rows.len() || labels.len() != rows.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} rows, {} subject ids, {} labels",
                rows.len(),
                subject_ids.len(),
                labels.len()
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {r} has {} values for {} features",
                    row.len(),
                    feature_names.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::SchemaMismatch(format!(
                    "non-finite value in row {r}, feature {:?}",
                    feature_names[j]
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::SchemaMismatch(format!("label {bad} is not 0 or 1")));
        }
        Ok(Self {
            feature_names,
            subject_ids,
            labels,
            rows,
        })
    }

    /// Builds a table from extracted rows; all rows must share names and order.
    pub fn from_feature_rows(rows: &[FeatureRow]) -> Result<Self> {
        let names: Vec<String> = rows
            .first()
            .map(|r| r.features.iter().map(|f| f.0.clone()).collect())
            .unwrap_or_default();
        for r in rows {
            if r.features.len() != names.len()
                || r.features.iter().zip(&names).any(|(f, n)| &f.0 != n)
            {
                return Err(Error::SchemaMismatch(format!(
                    "feature names of {} differ from the first row",
                    r.subject_id
                )));
            }
        }
        Self::new(
            names,
            rows.iter().map(|r| r.subject_id.clone()).collect(),
            rows.iter().map(|r| r.label).collect(),
            rows.iter()
                .map(|r| r.features.iter().map(|f| f.1).collect())
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn label_values(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| l as f64).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }

    pub fn require_both_classes(&self, what: &str) -> Result<()> {
        let [neg, pos] = self.class_counts();
        if neg == 0 || pos == 0 {
            return Err(Error::SingleClass(format!(
                "{what}: {neg} negatives, {pos} positives"
            )));
        }
        Ok(())
    }

    pub fn subset_rows(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            subject_ids: indices
                .iter()
                .map(|&i| self.subject_ids[i].clone())
                .collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Projects onto `names`, in that order.
    pub fn select_features(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::SchemaMismatch(format!("feature {n:?} not in table")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            feature_names: names.to_vec(),
            subject_ids: self.subject_ids.clone(),
            labels: self.labels.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
        })
    }

    /// Columns `subject_id,label,<features...>`; floats use shortest
    /// round-trip formatting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["subject_id".to_string(), "label".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for ((id, label), row) in self.subject_ids.iter().zip(&self.labels).zip(&self.rows) {
            let mut rec = vec![id.clone(), label.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "subject_id" || &header[1] != "label" {
            return Err(Error::format(
                path,
                "header must start with subject_id,label",
            ));
        }
        let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let (mut ids, mut labels, mut rows) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            ids.push(rec[0].to_string());
            labels.push(
                rec[1]
                    .parse::<u8>()
                    .map_err(|_| Error::format(path, format!("bad label {:?}", &rec[1])))?,
            );
            let row = rec
                .iter()
                .skip(2)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::format(path, format!("bad value {v:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::new(names, ids, labels, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small() -> FeatureTable {
        FeatureTable::new(
            vec!["a".into(), "b".into()],
            vec!["s1".into(), "s2".into(), "s3".into()],
            vec![0, 1, 1],
            vec![vec![1.0, 0.1], vec![2.0, 0.2], vec![3.0, 1e-300]],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(FeatureTable::new(vec!["a".into(), "a".into()], vec![], vec![], vec![]).is_err());
        assert!(FeatureTable::new(
            vec!["a".into()],
            vec!["s".into()],
            vec![0],
            vec![vec![f64::NAN]]
        )
        .is_err());
        assert!(
            FeatureTable::new(vec!["a".into()], vec!["s".into()], vec![2], vec![vec![1.0]])
                .is_err()
        );
        assert!(FeatureTable::new(
            vec!["a".into()],
            vec!["s".into()],
            vec![0],
            vec![vec![1.0, 2.0]]
        )
        .is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let t = small();
        let p = dir.path().join("t.csv");
        t.write_csv(&p).unwrap();
        assert_eq!(FeatureTable::read_csv(&p).unwrap(), t);
    }

    #[test]
    fn projections() {
        let t = small();
        let s = t.select_features(&["b".into()]).unwrap();
        assert_eq!(s.rows[1], vec![0.2]);
        assert!(t.select_features(&["zz".into()]).is_err());
        let r = t.subset_rows(&[2, 0]);
        assert_eq!(r.subject_ids, vec!["s3", "s1"]);
        assert_eq!(t.class_counts(), [1, 2]);
    }
}
