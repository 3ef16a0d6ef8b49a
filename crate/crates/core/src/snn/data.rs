use std::path::{Path, PathBuf};

use super::SnnError;

pub const IRIS_CSV_HEADER: &str = "sepal_length,sepal_width,petal_length,petal_width,label";
pub const CLASS_NAMES: [&str; 3] = ["setosa", "versicolor", "virginica"];
pub const N_FEATURES: usize = 4;
pub const N_CLASSES: usize = 3;
/// Environment variable naming a directory that holds `iris.csv`.
pub const DATA_DIR_ENV: &str = "SBNEURO_DATA_DIR";

/// The Iris CSV shipped with the crate.
pub const EMBEDDED_IRIS_CSV: &str = include_str!("../../data/iris.csv");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Sepal length, sepal width, petal length, petal width, cm.
    pub features: [f64; N_FEATURES],
    pub label: usize,
}

/// Fisher's Iris: 150 samples, 50 per class.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisDataset {
    samples: Vec<Sample>,
}

impl IrisDataset {
    /// The copy shipped with the crate.
    pub fn embedded() -> Self {
        Self::from_csv(EMBEDDED_IRIS_CSV).expect("embedded iris.csv is valid")
    }

    /// Loads `path` if given, else `$SBNEURO_DATA_DIR/iris.csv` if the
    /// variable is set, else the embedded copy. Returns the file actually
    /// read, if any.
    pub fn load(path: Option<&Path>) -> Result<(Self, Option<PathBuf>), SnnError> {
        match Self::resolve_path(path) {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| SnnError::Dataset(format!("{}: {e}", p.display())))?;
                Ok((Self::from_csv(&text)?, Some(p)))
            }
            None => Ok((Self::embedded(), None)),
        }
    }

    /// File [`IrisDataset::load`] would read, `None` for the embedded copy.
    pub fn resolve_path(path: Option<&Path>) -> Option<PathBuf> {
        match path {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(DATA_DIR_ENV).map(|d| PathBuf::from(d).join("iris.csv")),
        }
    }

    pub fn from_csv(text: &str) -> Result<Self, SnnError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| SnnError::Dataset(e.to_string()))?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if header != IRIS_CSV_HEADER {
            return Err(SnnError::Dataset(format!(
                "bad header {header:?}, expected {IRIS_CSV_HEADER:?}"
            )));
        }
        let mut samples = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| SnnError::Dataset(e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |msg: String| SnnError::Dataset(format!("line {line}: {msg}"));
            if rec.len() != N_FEATURES + 1 {
                return Err(bad(format!("expected {} fields", N_FEATURES + 1)));
            }
            let mut features = [0.0; N_FEATURES];
            for (k, f) in features.iter_mut().enumerate() {
                *f = rec[k]
                    .parse::<f64>()
                    .map_err(|e| bad(format!("field {}: {e}", k + 1)))?;
                if !(f.is_finite() && *f > 0.0) {
                    return Err(bad(format!("feature {} must be positive", k + 1)));
                }
            }
            let label = CLASS_NAMES
                .iter()
                .position(|&n| n == &rec[N_FEATURES])
                .ok_or_else(|| bad(format!("unknown label {:?}", &rec[N_FEATURES])))?;
            samples.push(Sample { features, label });
        }
        if samples.len() != 150 {
            return Err(SnnError::Dataset(format!(
                "expected 150 rows, found {}",
                samples.len()
            )));
        }
        for (c, name) in CLASS_NAMES.iter().enumerate() {
            let n = samples.iter().filter(|s| s.label == c).count();
            if n != 50 {
                return Err(SnnError::Dataset(format!(
                    "expected 50 {name} rows, found {n}"
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Per-feature (min, max) over all samples.
    pub fn feature_ranges(&self) -> [(f64, f64); N_FEATURES] {
        let mut r = [(f64::INFINITY, f64::NEG_INFINITY); N_FEATURES];
        for s in &self.samples {
            for (k, &x) in s.features.iter().enumerate() {
                r[k].0 = r[k].0.min(x);
                r[k].1 = r[k].1.max(x);
            }
        }
        r
    }
}
