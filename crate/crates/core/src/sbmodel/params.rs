use serde::{Deserialize, Serialize};

use super::ModelError;

/// Boltzmann constant, J/K.
pub const K_BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const Q_ELECTRON: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const EPS_0: f64 = 8.854_187_812_8e-12;

pub const PARAMS_SCHEMA: &str = "sbmodel-params-v1";

/// Gate lengths of the fabricated devices, m.
pub const MEASURED_GATE_LENGTHS: [f64; 4] = [10e-6, 20e-6, 25e-6, 75e-6];
/// Device width shared by all fabricated devices, m.
pub const MEASURED_WIDTH: f64 = 33e-6;
/// HfO2 top-gate oxide thickness, m.
pub const HFO2_THICKNESS: f64 = 16e-9;
/// Assumed HfO2 relative permittivity.
pub const HFO2_EPS_REL: f64 = 20.0;
/// Contact cross-section depth used for the default emission area, m.
pub const CONTACT_DEPTH: f64 = 40e-9;

/// Compact-model constants of a Schottky-barrier MOSFET.
///
/// Energies are in eV, everything else in SI units. The thermionic
/// constants (`temperature`, `a_star`, `a_eff`) and the barrier/resistivity
/// values in [`Default`] are modelling presets, not measured data; a fit
/// against measured sweeps is expected to override them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub phi_b0: f64,
    pub gamma_tg: f64,
    pub gamma_bg: f64,
    pub phi_min: f64,
    pub v_t0: f64,
    pub n_ideality: f64,
    pub temperature: f64,
    pub a_star: f64,
    pub a_eff: f64,
    pub rho_sheet: f64,
    pub r_sd_ext: f64,
    pub l_g: f64,
    pub w: f64,
    pub t_ox: f64,
    pub eps_ox_rel: f64,
    pub i_gate_leak: f64,
}

impl Default for DeviceParams {
    /// Top-gated 10/33 µm device.
    fn default() -> Self {
        Self {
            phi_b0: 0.75,
            gamma_tg: 0.1,
            gamma_bg: 0.05,
            phi_min: 0.3,
            v_t0: 0.0,
            n_ideality: 10.0,
            temperature: 300.0,
            a_star: 1.12e6,
            a_eff: MEASURED_WIDTH * CONTACT_DEPTH,
            rho_sheet: 1.0e7,
            r_sd_ext: 1.0e4,
            l_g: 10e-6,
            w: MEASURED_WIDTH,
            t_ox: HFO2_THICKNESS,
            eps_ox_rel: HFO2_EPS_REL,
            i_gate_leak: 1e-12,
        }
    }
}

impl DeviceParams {
    /// Default device with the gate length replaced.
    pub fn with_gate_length(l_g: f64) -> Self {
        Self {
            l_g,
            ..Self::default()
        }
    }

    /// Channel-resistance-limited preset: the barrier is fully transparent
    /// (`phi_min = 0`) and far below the drive at the preset bias.
    pub fn channel_limited(l_g: f64) -> Self {
        Self {
            phi_min: 0.0,
            l_g,
            ..Self::default()
        }
    }

    /// Thermal voltage kT/q, V.
    pub fn thermal_voltage(&self) -> f64 {
        K_BOLTZMANN * self.temperature / Q_ELECTRON
    }

    /// Geometric channel resistance rho_sheet * L / W, Ω.
    pub fn channel_resistance(&self) -> f64 {
        self.rho_sheet * self.l_g / self.w
    }

    /// Total series resistance of the channel plus external S/D, Ω.
    pub fn series_resistance(&self) -> f64 {
        self.channel_resistance() + self.r_sd_ext
    }

    /// Areal top-gate oxide capacitance, F/m².
    pub fn c_ox_areal(&self) -> f64 {
        self.eps_ox_rel * EPS_0 / self.t_ox
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("phi_b0", self.phi_b0),
            ("gamma_tg", self.gamma_tg),
            ("gamma_bg", self.gamma_bg),
            ("phi_min", self.phi_min),
            ("v_t0", self.v_t0),
            ("n_ideality", self.n_ideality),
            ("temperature", self.temperature),
            ("a_star", self.a_star),
            ("a_eff", self.a_eff),
            ("rho_sheet", self.rho_sheet),
            ("r_sd_ext", self.r_sd_ext),
            ("l_g", self.l_g),
            ("w", self.w),
            ("t_ox", self.t_ox),
            ("eps_ox_rel", self.eps_ox_rel),
            ("i_gate_leak", self.i_gate_leak),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(ModelError::InvalidParams(format!("{name} is not finite")));
            }
        }
        let checks = [
            (self.phi_min >= 0.0, "phi_min must be >= 0"),
            (self.phi_b0 >= self.phi_min, "phi_b0 must be >= phi_min"),
            (self.gamma_tg > 0.0, "gamma_tg must be > 0"),
            (self.n_ideality >= 1.0, "n_ideality must be >= 1"),
            (self.temperature > 0.0, "temperature must be > 0"),
            (self.a_star > 0.0, "a_star must be > 0"),
            (self.a_eff > 0.0, "a_eff must be > 0"),
            (self.rho_sheet >= 0.0, "rho_sheet must be >= 0"),
            (self.r_sd_ext >= 0.0, "r_sd_ext must be >= 0"),
            (self.l_g > 0.0, "l_g must be > 0"),
            (self.w > 0.0, "w must be > 0"),
            (self.t_ox > 0.0, "t_ox must be > 0"),
            (self.eps_ox_rel > 0.0, "eps_ox_rel must be > 0"),
            (self.i_gate_leak >= 0.0, "i_gate_leak must be >= 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(ModelError::InvalidParams(msg.to_string()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = ParamsDoc {
            schema: PARAMS_SCHEMA.to_string(),
            params: *self,
        };
        serde_json::to_string_pretty(&doc).expect("params serialize")
    }

    /// Parses and validates a `sbmodel-params-v1` document.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ParamsDoc =
            serde_json::from_str(text).map_err(|e| ModelError::InvalidParams(e.to_string()))?;
        if doc.schema != PARAMS_SCHEMA {
            return Err(ModelError::InvalidParams(format!(
                "unexpected schema {:?}, want {PARAMS_SCHEMA:?}",
                doc.schema
            )));
        }
        doc.params.validate()?;
        Ok(doc.params)
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsDoc {
    schema: String,
    #[serde(flatten)]
    params: DeviceParams,
}

/// Terminal voltages of one operating point, V.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BiasPoint {
    pub v_tg: f64,
    pub v_bg: f64,
    pub v_ds: f64,
}

impl BiasPoint {
    pub fn new(v_tg: f64, v_bg: f64, v_ds: f64) -> Self {
        Self { v_tg, v_bg, v_ds }
    }

    pub fn is_finite(&self) -> bool {
        self.v_tg.is_finite() && self.v_bg.is_finite() && self.v_ds.is_finite()
    }
}
