use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{standard_normal, Matrix, RngSeed};

/// Samples as columns with one class id per sample. Class ids index
/// `class_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Matrix<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(samples: Matrix<f64>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if labels.len() != samples.cols() {
            return Err(Error::DimensionMismatch {
                expected: samples.cols(),
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} has no class name ({} classes)",
                class_names.len()
            )));
        }
        Ok(Self {
            samples,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Sample indices of each class, in file order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            samples: self.samples.select_columns(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Parses comma-separated rows of numeric features with the class label in
/// the last column. A first row whose features are not all numeric is taken
/// as a header. Class ids follow the sorted order of the label strings.
pub fn parse_labeled_csv(text: &str) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        if record.len() < 2 {
            return Err(Error::Format(format!(
                "row {} needs at least one feature and a label",
                line + 1
            )));
        }
        let n = record.len() - 1;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().take(n).map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Format(format!("row {} has a non-finite feature", line + 1)));
                }
                if let Some(first) = features.first() {
                    if first.len() != v.len() {
                        return Err(Error::Format(format!(
                            "row {} has {} features, expected {}",
                            line + 1,
                            v.len(),
                            first.len()
                        )));
                    }
                }
                features.push(v);
                names.push(record[n].to_string());
            }
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Format(format!("row {}: {e}", line + 1))),
        }
    }
    if features.is_empty() {
        return Err(Error::EmptySamples);
    }
    let class_names: Vec<String> = names.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = names
        .iter()
        .map(|n| class_names.binary_search(n).expect("name collected above"))
        .collect();
    let dim = features[0].len();
    LabeledDataset::new(Matrix::from_columns(dim, &features)?, labels, class_names)
}

pub fn load_labeled_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    parse_labeled_csv(&std::fs::read_to_string(path)?)
}

/// Writes one sample per line, label last, with full float precision.
pub fn write_labeled_csv(data: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    for (col, &label) in data.samples.columns().zip(&data.labels) {
        let mut row: Vec<String> = col.iter().map(|v| format!("{v:?}")).collect();
        row.push(data.class_names[label].clone());
        w.write_record(&row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Two Gaussian classes in `dim` dimensions whose means differ only along
/// the first axis (±1, spread 0.5). The remaining axes are pure noise with
/// standard deviation 2, so a random low-dimensional projection mostly sees
/// noise. Samples alternate by class.
pub fn two_class_gaussian(dim: usize, per_class: usize, seed: RngSeed) -> Result<LabeledDataset> {
    if dim < 2 {
        return Err(Error::InvalidArgument("two-class data needs dim >= 2".into()));
    }
    let mut rng = seed.rng();
    let mut cols = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        for (class, mean) in [(0usize, 1.0), (1, -1.0)] {
            let v: Vec<f64> = (0..dim)
                .map(|r| {
                    let z: f64 = standard_normal(&mut rng);
                    if r == 0 {
                        mean + 0.5 * z
                    } else {
                        2.0 * z
                    }
                })
                .collect();
            cols.push(v);
            labels.push(class);
        }
    }
    LabeledDataset::new(Matrix::from_columns(dim, &cols)?, labels, vec!["a".into(), "b".into()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let d = parse_labeled_csv("x,y,class\n1,2,b\n3.5, 4 ,a\n0,0,b\n").unwrap();
        assert_eq!(d.samples.shape(), (2, 3));
        assert_eq!(d.class_names, vec!["a", "b"]);
        assert_eq!(d.labels, vec![1, 0, 1]);
        assert_eq!(d.samples.col(1), &[3.5, 4.0]);
        let e = parse_labeled_csv("1,2,b\n3.5,4,a\n0,0,b\n").unwrap();
        assert_eq!(d, e);
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(matches!(parse_labeled_csv("1,2,a\n1,b\n"), Err(Error::Format(_))));
        assert!(matches!(parse_labeled_csv("1,2,a\n1,2,3,a\n"), Err(Error::Format(_))));
        assert!(matches!(parse_labeled_csv("1,x,a\n1,y,a\n"), Err(Error::Format(_))));
        assert!(matches!(parse_labeled_csv("h1,h2\n"), Err(Error::EmptySamples)));
    }

    #[test]
    fn csv_round_trip() {
        let d = two_class_gaussian(3, 5, RngSeed(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_labeled_csv(&d, &p).unwrap();
        assert_eq!(load_labeled_csv(&p).unwrap(), d);
        assert_eq!(d.class_members(), vec![vec![0, 2, 4, 6, 8], vec![1, 3, 5, 7, 9]]);
    }
}
