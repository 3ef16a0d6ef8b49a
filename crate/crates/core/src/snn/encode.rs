use serde::{Deserialize, Serialize};

use super::data::{IrisDataset, N_FEATURES};
use super::SnnError;

/// Gaussian receptive fields turning each feature into a small population
/// of input rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub fields_per_feature: usize,
    /// `centers[f][k]`: centre of field `k` of feature `f`.
    pub centers: Vec<Vec<f64>>,
    /// Per-feature width.
    pub sigma: Vec<f64>,
    /// Peak input rate, Hz.
    pub r_max: f64,
}

impl EncoderConfig {
    /// Evenly spaced centres over each feature's observed range, width 0.8 of
    /// the spacing.
    pub fn spanning(ranges: &[(f64, f64)], fields_per_feature: usize, r_max: f64) -> Self {
        let mut centers = Vec::with_capacity(ranges.len());
        let mut sigma = Vec::with_capacity(ranges.len());
        for &(lo, hi) in ranges {
            let spacing = (hi - lo) / (fields_per_feature.max(2) - 1) as f64;
            centers.push(
                (0..fields_per_feature)
                    .map(|k| lo + k as f64 * spacing)
                    .collect(),
            );
            sigma.push(0.8 * spacing);
        }
        Self {
            fields_per_feature,
            centers,
            sigma,
            r_max,
        }
    }

    /// 4 fields per feature at 200 Hz over the dataset's ranges.
    pub fn for_dataset(data: &IrisDataset) -> Self {
        Self::spanning(&data.feature_ranges(), 4, 200.0)
    }

    pub fn n_inputs(&self) -> usize {
        self.centers.iter().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<(), SnnError> {
        let bad = |m: &str| Err(SnnError::InvalidConfig(m.to_string()));
        if self.centers.len() != N_FEATURES || self.sigma.len() != N_FEATURES {
            return bad("encoder needs one centre list and width per feature");
        }
        if self
            .centers
            .iter()
            .any(|c| c.len() != self.fields_per_feature)
        {
            return bad("every feature needs fields_per_feature centres");
        }
        if !self.sigma.iter().all(|s| s.is_finite() && *s > 0.0) {
            return bad("encoder widths must be positive");
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return bad("r_max must be positive");
        }
        if self.centers.iter().flatten().any(|c| !c.is_finite()) {
            return bad("encoder centres must be finite");
        }
        Ok(())
    }

    /// Input rates, Hz, feature-major.
    pub fn encode(&self, features: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_inputs());
        for ((&x, centers), &s) in features.iter().zip(&self.centers).zip(&self.sigma) {
            for &c in centers {
                let z = (x - c) / s;
                out.push(self.r_max * (-0.5 * z * z).exp());
            }
        }
        out
    }
}
