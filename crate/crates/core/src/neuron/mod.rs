//! Capacitor integrate-and-fire neuron driven by a transistor current source.
//!
//! The membrane is the capacitor voltage. Between spikes
//!
//! ```text
//! (c_ext + c_par)·dv/dt = I_source(v_tg, v_d − v) − g_leak·v
//! ```
//!
//! is integrated with classical RK4. When a step carries `v` across `v_th`
//! the crossing time is placed by linear interpolation inside the step, a
//! spike is recorded and the membrane is held at `v_reset` for
//! `t_refractory`. Integration then resumes for what is left of the step.

mod config;

pub use config::{CurrentSource, NeuronConfig, C_LARGE, C_SMALL, NEURON_SCHEMA, V_D_HIGH, V_D_LOW};

use thiserror::Error;

use crate::io::{fmt_f64, write_numeric_csv};
use crate::sbmodel::ModelError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NeuronError {
    #[error("invalid neuron config: {0}")]
    InvalidConfig(String),
    #[error(
        "membrane state became non-physical at t = {t} s (dt too large for this configuration)"
    )]
    NonFiniteState { t: f64 },
    #[error("current must be positive, got {0} A")]
    NonPositiveCurrent(f64),
    #[error("inconsistent frequency ratio: parasitic capacitance would be {c_par:e} F")]
    InconsistentRatio { c_par: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Source(#[from] ModelError),
}

/// Evolving membrane state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeuronState {
    pub v_mem: f64,
    pub t: f64,
    pub refractory_until: f64,
    pub spike_times: Vec<f64>,
}

impl NeuronState {
    /// Membrane at `v_reset`, time zero, no spikes.
    pub fn at_rest(config: &NeuronConfig) -> Self {
        Self {
            v_mem: config.v_reset,
            ..Self::default()
        }
    }
}

/// Upper bound on spikes emitted inside a single step.
const MAX_EVENTS_PER_STEP: usize = 10_000;

fn membrane_slope(config: &NeuronConfig, v_tg: f64, v: f64) -> Result<f64, NeuronError> {
    let i = config.source.current(v_tg, config.v_d - v)?;
    Ok((i - config.g_leak * v) / config.c_total())
}

fn rk4(config: &NeuronConfig, v_tg: f64, v: f64, h: f64) -> Result<f64, NeuronError> {
    let k1 = membrane_slope(config, v_tg, v)?;
    let k2 = membrane_slope(config, v_tg, v + 0.5 * h * k1)?;
    let k3 = membrane_slope(config, v_tg, v + 0.5 * h * k2)?;
    let k4 = membrane_slope(config, v_tg, v + h * k3)?;
    Ok(v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Advances `state` by `dt` at constant gate voltage `v_tg`.
///
/// Returns the spike times emitted during the step (also appended to
/// `state.spike_times`).
pub fn step(
    state: &mut NeuronState,
    config: &NeuronConfig,
    v_tg: f64,
    dt: f64,
) -> Result<Vec<f64>, NeuronError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(NeuronError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let t_start = state.t;
    let t_end = t_start + dt;
    let (v_lo, v_hi) = config.envelope();
    let mut t = t_start;
    let mut v = state.v_mem;
    let mut spikes = Vec::new();

    for _ in 0..MAX_EVENTS_PER_STEP {
        if t >= t_end {
            break;
        }
        if state.refractory_until > t {
            t = state.refractory_until.min(t_end);
            v = config.v_reset;
            continue;
        }
        let h = t_end - t;
        let v1 = rk4(config, v_tg, v, h)?;
        if !v1.is_finite() {
            return Err(NeuronError::NonFiniteState { t });
        }
        if v < config.v_th && v1 >= config.v_th {
            // A 1-D flow cannot pass a point where it is not moving upward;
            // such a "crossing" is an unstable-step artefact.
            if membrane_slope(config, v_tg, config.v_th)? <= 0.0 {
                return Err(NeuronError::NonFiniteState { t });
            }
            let frac = (config.v_th - v) / (v1 - v);
            let t_cross = t + h * frac;
            if spikes
                .last()
                .or(state.spike_times.last())
                .is_some_and(|&last| t_cross <= last)
            {
                return Err(NeuronError::NonFiniteState { t });
            }
            spikes.push(t_cross);
            state.spike_times.push(t_cross);
            state.refractory_until = t_cross + config.t_refractory;
            v = config.v_reset;
            t = t_cross;
            if frac >= 1.0 {
                break;
            }
            continue;
        }
        if v1 < v_lo || v1 > v_hi {
            return Err(NeuronError::NonFiniteState { t });
        }
        v = v1;
        t = t_end;
    }
    if t < t_end {
        return Err(NeuronError::NonFiniteState { t });
    }
    state.v_mem = v;
    state.t = t_end;
    Ok(spikes)
}

/// Sampled membrane voltage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub t: Vec<f64>,
    pub v_mem: Vec<f64>,
}

impl Trace {
    fn push(&mut self, t: f64, v: f64) {
        self.t.push(t);
        self.v_mem.push(v);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `t,v_mem` CSV.
    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 2]> = self
            .t
            .iter()
            .zip(&self.v_mem)
            .map(|(&t, &v)| [t, v])
            .collect();
        write_numeric_csv("t,v_mem", rows.iter().map(|r| &r[..]))
    }
}

/// `t_spike` CSV.
pub fn spikes_to_csv(spikes: &[f64]) -> String {
    let mut out = String::from("t_spike\n");
    for &t in spikes {
        out.push_str(&fmt_f64(t));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunResult {
    pub spikes: Vec<f64>,
    /// Present when a trace was requested. Spike events appear as a pair of
    /// samples at the crossing time: one at `v_th`, one at `v_reset`.
    pub trace: Option<Trace>,
}

/// Simulates `duration` seconds from rest at constant `v_tg`.
///
/// `decimation = Some(k)` keeps every k-th step in the trace.
pub fn run(
    config: &NeuronConfig,
    v_tg: f64,
    duration: f64,
    dt: f64,
    decimation: Option<usize>,
) -> Result<RunResult, NeuronError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(NeuronError::InvalidArgument(format!(
            "duration must be positive, got {duration}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(NeuronError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    config.validate()?;
    let mut state = NeuronState::at_rest(config);
    let n_steps = (duration / dt).ceil() as u64;
    let mut trace = decimation.map(|_| Trace::default());
    let every = decimation.unwrap_or(1).max(1) as u64;
    if let Some(tr) = trace.as_mut() {
        tr.push(0.0, state.v_mem);
    }
    for k in 1..=n_steps {
        // Step boundaries sit on the k·dt grid; the last one is trimmed.
        let target = (k as f64 * dt).min(duration);
        let h = target - state.t;
        if h <= 0.0 {
            continue;
        }
        let spikes = step(&mut state, config, v_tg, h)?;
        state.t = target;
        if let Some(tr) = trace.as_mut() {
            for &ts in &spikes {
                tr.push(ts, config.v_th);
                tr.push(ts, config.v_reset);
            }
            if k % every == 0 || k == n_steps {
                tr.push(state.t, state.v_mem);
            }
        }
    }
    Ok(RunResult {
        spikes: state.spike_times,
        trace,
    })
}

/// Firing rate of an ideal integrate-and-fire neuron under constant current,
/// Hz.
pub fn ideal_frequency(i_const: f64, config: &NeuronConfig) -> Result<f64, NeuronError> {
    if !(i_const > 0.0) {
        return Err(NeuronError::NonPositiveCurrent(i_const));
    }
    let charge_time = config.c_total() * (config.v_th - config.v_reset) / i_const;
    Ok(1.0 / (charge_time + config.t_refractory))
}

/// Controls for [`measure_frequency`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    /// Fixed step; `None` picks `period_estimate / steps_per_period`.
    pub dt: Option<f64>,
    pub steps_per_period: f64,
    /// Simulated-time limit, s.
    pub timeout: f64,
    pub max_steps: u64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            dt: None,
            steps_per_period: 1000.0,
            timeout: 1000.0,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyMeasurement {
    pub f_hz: f64,
    pub timed_out: bool,
    /// Step actually used, s (0 when no simulation was needed).
    pub dt: f64,
}

/// Charging time from reset to threshold plus the refractory hold, by
/// Simpson quadrature of `C/(I − g·v)` over the membrane range. `None` when
/// the net current vanishes somewhere below threshold, i.e. the neuron never
/// fires.
pub fn estimated_period(config: &NeuronConfig, v_tg: f64) -> Result<Option<f64>, NeuronError> {
    const PANELS: usize = 64;
    let h = (config.v_th - config.v_reset) / PANELS as f64;
    let mut sum = 0.0;
    for k in 0..=PANELS {
        let v = config.v_reset + k as f64 * h;
        let slope = membrane_slope(config, v_tg, v)?;
        if !(slope > 0.0) {
            return Ok(None);
        }
        let w = if k == 0 || k == PANELS {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w / slope;
    }
    let period = sum * h / 3.0 + config.t_refractory;
    Ok(period.is_finite().then_some(period))
}

/// Step giving `steps_per_period` steps per estimated firing period, or
/// `None` if the neuron never reaches threshold.
pub fn recommended_dt(
    config: &NeuronConfig,
    v_tg: f64,
    steps_per_period: f64,
) -> Result<Option<f64>, NeuronError> {
    Ok(estimated_period(config, v_tg)?.map(|p| p / steps_per_period))
}

/// Steady-state firing rate at constant `v_tg`: `1/(t₃ − t₂)` from the first
/// three spikes. Returns 0 Hz with `timed_out` when three spikes do not
/// occur within the limits.
pub fn measure_frequency(
    config: &NeuronConfig,
    v_tg: f64,
    opts: &MeasureOptions,
) -> Result<FrequencyMeasurement, NeuronError> {
    config.validate()?;
    let timeout = FrequencyMeasurement {
        f_hz: 0.0,
        timed_out: true,
        dt: 0.0,
    };
    let dt = match opts.dt {
        Some(dt) => dt,
        None => match recommended_dt(config, v_tg, opts.steps_per_period)? {
            Some(dt) => dt,
            None => return Ok(timeout),
        },
    };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(NeuronError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut state = NeuronState::at_rest(config);
    let mut k: u64 = 0;
    while state.spike_times.len() < 3 {
        if k >= opts.max_steps || state.t >= opts.timeout {
            return Ok(FrequencyMeasurement { dt, ..timeout });
        }
        k += 1;
        let target = k as f64 * dt;
        let h = target - state.t;
        step(&mut state, config, v_tg, h)?;
        state.t = target;
    }
    let s = &state.spike_times;
    Ok(FrequencyMeasurement {
        f_hz: 1.0 / (s[2] - s[1]),
        timed_out: false,
        dt,
    })
}

/// Frequency against gate voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyCurve {
    pub points: Vec<(f64, f64)>,
    pub timed_out: Vec<bool>,
    pub config: NeuronConfig,
}

impl FrequencyCurve {
    /// `v_tg,f_hz` CSV.
    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 2]> = self.points.iter().map(|&(v, f)| [v, f]).collect();
        write_numeric_csv("v_tg,f_hz", rows.iter().map(|r| &r[..]))
    }
}

pub fn frequency_sweep(
    config: &NeuronConfig,
    v_tgs: &[f64],
    opts: &MeasureOptions,
) -> Result<FrequencyCurve, NeuronError> {
    let mut points = Vec::with_capacity(v_tgs.len());
    let mut timed_out = Vec::with_capacity(v_tgs.len());
    for &v_tg in v_tgs {
        let m = measure_frequency(config, v_tg, opts)?;
        points.push((v_tg, m.f_hz));
        timed_out.push(m.timed_out);
    }
    Ok(FrequencyCurve {
        points,
        timed_out,
        config: config.clone(),
    })
}

/// Parasitic capacitance that explains a measured frequency ratio between a
/// small and a large external capacitor under the same drive:
/// `(c_large + c_par) = f_ratio·(c_small + c_par)`.
pub fn fit_parasitic(f_ratio: f64, c_small: f64, c_large: f64) -> Result<f64, NeuronError> {
    if !(f_ratio > 1.0 && f_ratio.is_finite()) {
        return Err(NeuronError::InvalidArgument(format!(
            "frequency ratio must exceed 1, got {f_ratio}"
        )));
    }
    if !(c_small > 0.0 && c_large > c_small) {
        return Err(NeuronError::InvalidArgument(
            "need 0 < c_small < c_large".into(),
        ));
    }
    let c_par = (c_large - f_ratio * c_small) / (f_ratio - 1.0);
    if c_par >= 0.0 {
        Ok(c_par)
    } else if c_par > -8.0 * f64::EPSILON * c_large {
        // Rounding residue of f_ratio == c_large / c_small.
        Ok(0.0)
    } else {
        Err(NeuronError::InconsistentRatio { c_par })
    }
}
