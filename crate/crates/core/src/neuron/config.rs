use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::NeuronError;
use crate::extract::VccsModel;
use crate::sbmodel::{drain_current, BiasPoint, DeviceParams};

pub const NEURON_SCHEMA: &str = "neuron-v1";

/// Capacitors used in the measured neurons, F.
pub const C_SMALL: f64 = 10e-12;
pub const C_LARGE: f64 = 4.7e-9;
/// Drain supplies used in the measured neurons, V.
pub const V_D_LOW: f64 = 1.5;
pub const V_D_HIGH: f64 = 2.5;

/// What charges the membrane capacitor.
#[derive(Debug, Clone, PartialEq)]
pub enum CurrentSource {
    /// Ideal constant current, A; ignores the gate voltage.
    Constant(f64),
    /// Calibrated gate-voltage map; ignores the drain bias.
    Vccs(VccsModel),
    /// Full compact model, evaluated at `(v_tg, v_bg, v_d − v_mem)`.
    Device { params: DeviceParams, v_bg: f64 },
}

impl CurrentSource {
    /// Current into the membrane for gate voltage `v_tg` and drain-source
    /// voltage `v_ds`, A.
    pub fn current(&self, v_tg: f64, v_ds: f64) -> Result<f64, NeuronError> {
        match self {
            CurrentSource::Constant(i) => Ok(*i),
            CurrentSource::Vccs(m) => Ok(m.eval(v_tg)),
            CurrentSource::Device { params, v_bg } => {
                Ok(drain_current(params, &BiasPoint::new(v_tg, *v_bg, v_ds))?)
            }
        }
    }
}

/// Circuit constants of the capacitor neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronConfig {
    /// Discrete membrane capacitor, F.
    pub c_ext: f64,
    /// Lumped parasitic capacitance in parallel, F.
    pub c_par: f64,
    /// Comparator threshold, V.
    pub v_th: f64,
    pub v_reset: f64,
    pub t_refractory: f64,
    /// Parallel leak conductance, S.
    pub g_leak: f64,
    /// Drain supply, V.
    pub v_d: f64,
    pub source: CurrentSource,
}

impl NeuronConfig {
    /// Measured neuron constants: 0.6 V threshold, reset to 0, no leak, no
    /// parasitics.
    pub fn with_source(c_ext: f64, v_d: f64, source: CurrentSource) -> Self {
        Self {
            c_ext,
            c_par: 0.0,
            v_th: 0.6,
            v_reset: 0.0,
            t_refractory: 0.0,
            g_leak: 0.0,
            v_d,
            source,
        }
    }

    pub fn c_total(&self) -> f64 {
        self.c_ext + self.c_par
    }

    /// Voltage range a non-spiking step may land in before the state is
    /// declared non-physical.
    pub(crate) fn envelope(&self) -> (f64, f64) {
        let tol = 1e-6 * self.v_th.abs().max(self.v_d.abs()).max(1.0);
        (self.v_reset.min(0.0) - tol, self.v_th.max(self.v_d) + tol)
    }

    pub fn validate(&self) -> Result<(), NeuronError> {
        let bad = |msg: &str| Err(NeuronError::InvalidConfig(msg.to_string()));
        let all_finite = [
            self.c_ext,
            self.c_par,
            self.v_th,
            self.v_reset,
            self.t_refractory,
            self.g_leak,
            self.v_d,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return bad("non-finite field");
        }
        if !(self.c_ext > 0.0) {
            return bad("c_ext must be > 0");
        }
        if self.c_par < 0.0 {
            return bad("c_par must be >= 0");
        }
        if !(self.v_th > self.v_reset) {
            return bad("v_th must exceed v_reset");
        }
        if self.t_refractory < 0.0 {
            return bad("t_refractory must be >= 0");
        }
        if self.g_leak < 0.0 {
            return bad("g_leak must be >= 0");
        }
        match &self.source {
            CurrentSource::Constant(i) if !(i.is_finite() && *i >= 0.0) => {
                bad("constant current must be finite and >= 0")
            }
            CurrentSource::Device { params, v_bg } => {
                params
                    .validate()
                    .map_err(|e| NeuronError::InvalidConfig(e.to_string()))?;
                if v_bg.is_finite() {
                    Ok(())
                } else {
                    bad("v_bg must be finite")
                }
            }
            _ => Ok(()),
        }
    }

    /// `neuron-v1` JSON document with the source inlined.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("neuron config serialize")
    }

    fn to_doc(&self) -> NeuronDoc {
        let source = match &self.source {
            CurrentSource::Constant(i) => SourceDoc::ConstantCurrent(*i),
            CurrentSource::Vccs(m) => SourceDoc::Vccs(m.clone()),
            CurrentSource::Device { params, v_bg } => SourceDoc::Device {
                params: Some(serde_json::from_str(&params.to_json()).expect("params json")),
                params_path: None,
                v_bg: *v_bg,
            },
        };
        NeuronDoc {
            schema: NEURON_SCHEMA.into(),
            c_ext: self.c_ext,
            c_par: self.c_par,
            v_th: self.v_th,
            v_reset: self.v_reset,
            t_refractory: self.t_refractory,
            g_leak: self.g_leak,
            v_d: self.v_d,
            source,
        }
    }

    /// Parses a `neuron-v1` document. A device source given by
    /// `params_path` is resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, NeuronError> {
        let doc: NeuronDoc =
            serde_json::from_str(text).map_err(|e| NeuronError::InvalidConfig(e.to_string()))?;
        Self::from_doc(doc, base_dir)
    }

    fn from_doc(doc: NeuronDoc, base_dir: &Path) -> Result<Self, NeuronError> {
        if doc.schema != NEURON_SCHEMA {
            return Err(NeuronError::InvalidConfig(format!(
                "unexpected schema {:?}, want {NEURON_SCHEMA:?}",
                doc.schema
            )));
        }
        let source = match doc.source {
            SourceDoc::ConstantCurrent(i) => CurrentSource::Constant(i),
            SourceDoc::Vccs(m) => CurrentSource::Vccs(m),
            SourceDoc::Device {
                params,
                params_path,
                v_bg,
            } => {
                let params = match (params, params_path) {
                    (Some(inline), None) => DeviceParams::from_json(&inline.to_string()),
                    (None, Some(path)) => {
                        let path = base_dir.join(path);
                        let text = std::fs::read_to_string(&path).map_err(|e| {
                            NeuronError::InvalidConfig(format!("{}: {e}", path.display()))
                        })?;
                        DeviceParams::from_json(&text)
                    }
                    _ => {
                        return Err(NeuronError::InvalidConfig(
                            "device source needs exactly one of params / params_path".into(),
                        ))
                    }
                }
                .map_err(|e| NeuronError::InvalidConfig(e.to_string()))?;
                CurrentSource::Device { params, v_bg }
            }
        };
        let config = Self {
            c_ext: doc.c_ext,
            c_par: doc.c_par,
            v_th: doc.v_th,
            v_reset: doc.v_reset,
            t_refractory: doc.t_refractory,
            g_leak: doc.g_leak,
            v_d: doc.v_d,
            source,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, NeuronError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NeuronError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }
}

/// Embeds the `neuron-v1` document; a `params_path` source is resolved
/// against the working directory.
impl Serialize for NeuronConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for NeuronConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = NeuronDoc::deserialize(d)?;
        Self::from_doc(doc, Path::new(".")).map_err(serde::de::Error::custom)
    }
}

fn default_v_th() -> f64 {
    0.6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeuronDoc {
    schema: String,
    c_ext: f64,
    #[serde(default)]
    c_par: f64,
    #[serde(default = "default_v_th")]
    v_th: f64,
    #[serde(default)]
    v_reset: f64,
    #[serde(default)]
    t_refractory: f64,
    #[serde(default)]
    g_leak: f64,
    v_d: f64,
    source: SourceDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SourceDoc {
    ConstantCurrent(f64),
    Vccs(VccsModel),
    Device {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params_path: Option<PathBuf>,
        #[serde(default)]
        v_bg: f64,
    },
}
