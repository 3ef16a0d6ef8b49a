use serde::{Deserialize, Serialize};

use super::SnnError;
use crate::neuron::{run, NeuronConfig};

pub const WEIGHTS_SCHEMA: &str = "snn-weights-v1";

/// Plastic input-to-output weights, clipped to `[w_min, w_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseMatrix {
    rows: usize,
    cols: usize,
    /// Row-major: `w[j·cols + i]` connects input `j` to output `i`.
    w: Vec<f64>,
    pub w_min: f64,
    pub w_max: f64,
}

impl SynapseMatrix {
    pub fn filled(rows: usize, cols: usize, value: f64, (w_min, w_max): (f64, f64)) -> Self {
        Self {
            rows,
            cols,
            w: vec![value.clamp(w_min, w_max); rows * cols],
            w_min,
            w_max,
        }
    }

    pub fn from_row_major(
        rows: usize,
        cols: usize,
        w: Vec<f64>,
        (w_min, w_max): (f64, f64),
    ) -> Result<Self, SnnError> {
        if w.len() != rows * cols {
            return Err(SnnError::InvalidWeights(format!(
                "expected {} weights, found {}",
                rows * cols,
                w.len()
            )));
        }
        if !(w_min.is_finite() && w_max.is_finite() && w_min <= w_max) {
            return Err(SnnError::InvalidWeights("bad weight bounds".into()));
        }
        if w.iter()
            .any(|x| !(x.is_finite() && (w_min..=w_max).contains(x)))
        {
            return Err(SnnError::InvalidWeights("weight outside bounds".into()));
        }
        Ok(Self {
            rows,
            cols,
            w,
            w_min,
            w_max,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.w[input * self.cols + output]
    }

    /// Sets a weight, clipped to the bounds.
    pub fn set(&mut self, input: usize, output: usize, value: f64) {
        self.w[input * self.cols + output] = value.clamp(self.w_min, self.w_max);
    }

    /// Adds `delta` to a weight, clipped to the bounds.
    pub fn add(&mut self, input: usize, output: usize, delta: f64) {
        let v = self.get(input, output) + delta;
        self.set(input, output, v);
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.w
    }

    pub fn to_json(&self) -> String {
        let doc = WeightsDoc {
            schema: WEIGHTS_SCHEMA.into(),
            rows: self.rows,
            cols: self.cols,
            w_min: self.w_min,
            w_max: self.w_max,
            weights: self.w.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("weights serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SnnError> {
        let doc: WeightsDoc =
            serde_json::from_str(text).map_err(|e| SnnError::InvalidWeights(e.to_string()))?;
        if doc.schema != WEIGHTS_SCHEMA {
            return Err(SnnError::InvalidWeights(format!(
                "unexpected schema {:?}, want {WEIGHTS_SCHEMA:?}",
                doc.schema
            )));
        }
        Self::from_row_major(doc.rows, doc.cols, doc.weights, (doc.w_min, doc.w_max))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDoc {
    schema: String,
    rows: usize,
    cols: usize,
    w_min: f64,
    w_max: f64,
    weights: Vec<f64>,
}

/// Maps weighted input activity onto the output neurons' gate voltage:
/// `v_eff_i = v_bias + v_scale·Σ_j w_ij·rate_j/r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub v_bias: f64,
    pub v_scale: f64,
}

impl Drive {
    pub fn gate_voltages(&self, rates: &[f64], w: &SynapseMatrix, r_max: f64) -> Vec<f64> {
        (0..w.cols())
            .map(|i| {
                let s: f64 = rates
                    .iter()
                    .enumerate()
                    .map(|(j, &r)| w.get(j, i) * r / r_max)
                    .sum();
                self.v_bias + self.v_scale * s
            })
            .collect()
    }
}

/// Spike counts of the output neurons over `window`, each simulated from
/// rest with its gate voltage held constant. The window should span several
/// interspike intervals of the slowest neuron of interest.
pub fn forward(
    rates: &[f64],
    w: &SynapseMatrix,
    drive: &Drive,
    r_max: f64,
    neuron: &NeuronConfig,
    window: f64,
    dt: f64,
) -> Result<Vec<usize>, SnnError> {
    if rates.len() != w.rows() {
        return Err(SnnError::InvalidConfig(format!(
            "{} input rates for a {}-row weight matrix",
            rates.len(),
            w.rows()
        )));
    }
    drive
        .gate_voltages(rates, w, r_max)
        .into_iter()
        .map(|v| Ok(run(neuron, v, window, dt, None)?.spikes.len()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub class: usize,
    /// No output neuron fired; `class` is then 0 by convention.
    pub no_spike: bool,
}

/// Argmax of the counts; ties go to the lowest index.
pub fn predict(counts: &[usize]) -> Prediction {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    Prediction {
        class: best,
        no_spike: counts.iter().all(|&c| c == 0),
    }
}
