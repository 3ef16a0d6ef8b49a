use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{IrisDataset, Sample, N_CLASSES};
use super::encode::EncoderConfig;
use super::network::{forward, predict, Drive, SynapseMatrix};
use super::SnnError;
use crate::extract::calibrate_vccs;
use crate::io::write_numeric_csv;
use crate::neuron::{CurrentSource, NeuronConfig, C_LARGE, V_D_HIGH};
use crate::sbmodel::DeviceParams;

pub const TRAIN_CONFIG_SCHEMA: &str = "snn-train-v1";
pub const ACCURACY_CSV_HEADER: &str = "epoch,train_acc,test_acc";
/// Test-set accuracy of the reference result, 29 of 30.
pub const REFERENCE_ACCURACY: f64 = 29.0 / 30.0;

/// Output neuron used by the classifier: the 4.7 nF capacitor at 2.5 V
/// supply, driven through the voltage-to-current map of the default device
/// calibrated at mid-charge drain bias.
pub fn default_output_neuron() -> NeuronConfig {
    let params = DeviceParams::default();
    let v_ds = V_D_HIGH - 0.3;
    let vccs = calibrate_vccs(&params, (-1.0, 6.0), 141, 0.0, v_ds, 15)
        .expect("default device calibrates");
    NeuronConfig::with_source(C_LARGE, V_D_HIGH, CurrentSource::Vccs(vccs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub schema: String,
    /// Learning rate, per Hz of rate error.
    pub eta: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Fraction of each class used for training.
    pub split: f64,
    /// Simulated time per sample, s.
    pub sim_window: f64,
    /// Target output rates for the true and the other classes, Hz.
    pub r_target_hi: f64,
    pub r_target_lo: f64,
    /// Neuron integration step, s.
    pub dt: f64,
    pub drive: Drive,
    pub w_bounds: (f64, f64),
    /// Initial weights are drawn uniformly from this range.
    pub w_init: (f64, f64),
    /// Derived from the dataset's feature ranges when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<EncoderConfig>,
    pub neuron: NeuronConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            schema: TRAIN_CONFIG_SCHEMA.into(),
            eta: 2e-4,
            epochs: 40,
            seed: 42,
            split: 0.8,
            sim_window: 0.5,
            r_target_hi: 100.0,
            r_target_lo: 5.0,
            dt: 5e-4,
            drive: Drive {
                v_bias: 0.0,
                v_scale: 1.0,
            },
            w_bounds: (0.0, 1.0),
            w_init: (0.0, 0.2),
            encoder: None,
            neuron: default_output_neuron(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SnnError> {
        let bad = |m: &str| Err(SnnError::InvalidConfig(m.to_string()));
        if self.schema != TRAIN_CONFIG_SCHEMA {
            return bad("unexpected train config schema");
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad("split must lie in (0, 1)");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if !(self.sim_window > 0.0 && self.sim_window.is_finite()) {
            return bad("sim_window must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        let (lo, hi) = self.w_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("bad weight bounds");
        }
        let (a, b) = self.w_init;
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return bad("bad initial weight range");
        }
        if ![
            self.r_target_hi,
            self.r_target_lo,
            self.drive.v_bias,
            self.drive.v_scale,
        ]
        .iter()
        .all(|x| x.is_finite())
        {
            return bad("non-finite target or drive");
        }
        if let Some(e) = &self.encoder {
            e.validate()?;
        }
        self.neuron.validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("train config serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SnnError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| SnnError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn encoder_for(&self, data: &IrisDataset) -> EncoderConfig {
        self.encoder
            .clone()
            .unwrap_or_else(|| EncoderConfig::for_dataset(data))
    }
}

/// Output spike counts for one sample.
pub fn sample_counts(
    sample: &Sample,
    w: &SynapseMatrix,
    encoder: &EncoderConfig,
    cfg: &TrainConfig,
) -> Result<Vec<usize>, SnnError> {
    let rates = encoder.encode(&sample.features);
    forward(
        &rates,
        w,
        &cfg.drive,
        encoder.r_max,
        &cfg.neuron,
        cfg.sim_window,
        cfg.dt,
    )
}

/// One pass of the delta rule over `samples` in an order drawn from `rng`:
/// `Δw_ij = eta·(r_target_i − r_i)·rate_j/r_max`, clipped to the bounds.
pub fn train_epoch<R: Rng>(
    samples: &[Sample],
    w: &mut SynapseMatrix,
    encoder: &EncoderConfig,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(), SnnError> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    for k in order {
        let s = &samples[k];
        let rates = encoder.encode(&s.features);
        let counts = forward(
            &rates,
            w,
            &cfg.drive,
            encoder.r_max,
            &cfg.neuron,
            cfg.sim_window,
            cfg.dt,
        )?;
        for (i, &c) in counts.iter().enumerate() {
            let target = if i == s.label {
                cfg.r_target_hi
            } else {
                cfg.r_target_lo
            };
            let err = target - c as f64 / cfg.sim_window;
            if err == 0.0 {
                continue;
            }
            for (j, &r) in rates.iter().enumerate() {
                w.add(j, i, cfg.eta * err * r / encoder.r_max);
            }
        }
    }
    Ok(())
}

/// Fraction of `samples` classified correctly.
pub fn evaluate(
    samples: &[Sample],
    w: &SynapseMatrix,
    encoder: &EncoderConfig,
    cfg: &TrainConfig,
) -> Result<f64, SnnError> {
    Ok(count_correct(samples, w, encoder, cfg)? as f64 / samples.len() as f64)
}

fn count_correct(
    samples: &[Sample],
    w: &SynapseMatrix,
    encoder: &EncoderConfig,
    cfg: &TrainConfig,
) -> Result<usize, SnnError> {
    if samples.is_empty() {
        return Err(SnnError::EmptyPartition);
    }
    let mut correct = 0;
    for s in samples {
        if predict(&sample_counts(s, w, encoder, cfg)?).class == s.label {
            correct += 1;
        }
    }
    Ok(correct)
}

/// Per-class seeded shuffle, first `round(split·n_class)` of each class to
/// training. Both partitions keep dataset order.
pub fn stratified_split<R: Rng>(
    data: &IrisDataset,
    split: f64,
    rng: &mut R,
) -> (Vec<Sample>, Vec<Sample>) {
    let mut in_train = vec![false; data.samples().len()];
    for c in 0..N_CLASSES {
        let mut idx: Vec<usize> = (0..data.samples().len())
            .filter(|&k| data.samples()[k].label == c)
            .collect();
        idx.shuffle(rng);
        let n_train = (split * idx.len() as f64).round() as usize;
        for &k in &idx[..n_train] {
            in_train[k] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (s, t) in data.samples().iter().zip(in_train) {
        if t {
            train.push(*s);
        } else {
            test.push(*s);
        }
    }
    (train, test)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochAccuracy {
    pub epoch: usize,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub weights: SynapseMatrix,
    pub encoder: EncoderConfig,
    /// Entry 0 is the untrained network.
    pub history: Vec<EpochAccuracy>,
    pub final_train_acc: f64,
    pub final_test_acc: f64,
    pub peak_train_acc: f64,
    pub peak_test_acc: f64,
    pub test_correct: usize,
    pub test_total: usize,
    /// Final test accuracy is at least 29/30.
    pub reference_reached: bool,
    /// Some epoch's test accuracy is at least 29/30.
    pub reference_reached_at_peak: bool,
}

impl TrainReport {
    /// `epoch,train_acc,test_acc` CSV.
    pub fn history_csv(&self) -> String {
        let rows: Vec<[f64; 3]> = self
            .history
            .iter()
            .map(|h| [h.epoch as f64, h.train_acc, h.test_acc])
            .collect();
        write_numeric_csv(ACCURACY_CSV_HEADER, rows.iter().map(|r| &r[..]))
    }

    /// Summary lines for humans.
    pub fn summary(&self) -> String {
        format!(
            "final test accuracy {:.4} ({}/{})\nfinal train accuracy {:.4}\npeak test accuracy {:.4}\npeak train accuracy {:.4}\n29/30 reached: final {}, peak {}\n",
            self.final_test_acc,
            self.test_correct,
            self.test_total,
            self.final_train_acc,
            self.peak_test_acc,
            self.peak_train_acc,
            self.reference_reached,
            self.reference_reached_at_peak,
        )
    }
}

/// Draws the split and the initial weights exactly as [`train`] does.
pub fn prepare<R: Rng>(
    data: &IrisDataset,
    cfg: &TrainConfig,
    n_inputs: usize,
    rng: &mut R,
) -> (Vec<Sample>, Vec<Sample>, SynapseMatrix) {
    let (train, test) = stratified_split(data, cfg.split, rng);
    let (a, b) = cfg.w_init;
    let mut w = SynapseMatrix::filled(n_inputs, N_CLASSES, 0.0, cfg.w_bounds);
    for j in 0..n_inputs {
        for i in 0..N_CLASSES {
            let u: f64 = rng.random();
            w.set(j, i, a + (b - a) * u);
        }
    }
    (train, test, w)
}

/// Seeded split, initial weights, `cfg.epochs` epochs of the delta rule.
pub fn train(data: &IrisDataset, cfg: &TrainConfig) -> Result<TrainReport, SnnError> {
    cfg.validate()?;
    let encoder = cfg.encoder_for(data);
    encoder.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_set, test_set, mut w) = prepare(data, cfg, encoder.n_inputs(), &mut rng);

    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let mut test_correct = count_correct(&test_set, &w, &encoder, cfg)?;
    history.push(EpochAccuracy {
        epoch: 0,
        train_acc: evaluate(&train_set, &w, &encoder, cfg)?,
        test_acc: test_correct as f64 / test_set.len() as f64,
    });
    for epoch in 1..=cfg.epochs {
        train_epoch(&train_set, &mut w, &encoder, cfg, &mut rng)?;
        test_correct = count_correct(&test_set, &w, &encoder, cfg)?;
        history.push(EpochAccuracy {
            epoch,
            train_acc: evaluate(&train_set, &w, &encoder, cfg)?,
            test_acc: test_correct as f64 / test_set.len() as f64,
        });
    }
    let last = *history.last().expect("history has epoch 0");
    let peak_test_acc = history.iter().map(|h| h.test_acc).fold(0.0, f64::max);
    let peak_train_acc = history.iter().map(|h| h.train_acc).fold(0.0, f64::max);
    // Compare as counts to avoid rounding at exactly 29/30.
    let reaches =
        |acc: f64| acc * test_set.len() as f64 + 1e-9 >= REFERENCE_ACCURACY * test_set.len() as f64;
    Ok(TrainReport {
        weights: w,
        encoder,
        final_train_acc: last.train_acc,
        final_test_acc: last.test_acc,
        peak_train_acc,
        peak_test_acc,
        test_correct,
        test_total: test_set.len(),
        reference_reached: reaches(last.test_acc),
        reference_reached_at_peak: reaches(peak_test_acc),
        history,
    })
}
