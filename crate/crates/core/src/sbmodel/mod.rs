//! Schottky-barrier MOSFET compact model.
//!
//! The drain current is carried by thermionic emission over the source-side
//! Schottky barrier. The barrier is lowered linearly by the top and back
//! gates and floors at `phi_min`. The emitted current then flows through the
//! geometric channel resistance and a fixed external S/D resistance. The
//! drain-side junction is folded into `r_sd_ext`.
//!
//! For a given `v_ds` the series network is solved for the current `I`
//! satisfying
//!
//! ```text
//! v_ds = n·kT/q · ln(1 + I/I_s) + I·(R_ch + r_sd_ext)
//! ```
//!
//! which is strictly increasing in `I`, so a bracketed Newton iteration
//! always converges.

mod curve;
mod params;

pub use curve::{IvCurve, IvRecord, IV_CSV_HEADER};
pub use params::{
    BiasPoint, DeviceParams, CONTACT_DEPTH, EPS_0, HFO2_EPS_REL, HFO2_THICKNESS, K_BOLTZMANN,
    MEASURED_GATE_LENGTHS, MEASURED_WIDTH, PARAMS_SCHEMA, Q_ELECTRON,
};

use thiserror::Error;

/// Largest exponent fed to `exp` by the diode law; larger arguments saturate.
pub const MAX_EXP_ARG: f64 = 700.0;

/// Newton/bisection iteration cap of the series-network solve.
pub const MAX_SOLVER_ITERATIONS: usize = 100;

/// Relative KVL residual accepted by the series-network solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("series solve did not converge at {bias:?} (residual {residual:e} V)")]
    NonConvergence { bias: BiasPoint, residual: f64 },
    #[error("threshold current {i_crit:e} A not crossed for v_tg in [{v_lo}, {v_hi}] V")]
    ThresholdOutOfRange { i_crit: f64, v_lo: f64, v_hi: f64 },
}

/// Effective source barrier height at `bias`, eV.
pub fn effective_barrier(params: &DeviceParams, bias: &BiasPoint) -> f64 {
    let lowered =
        params.phi_b0 - params.gamma_tg * (bias.v_tg - params.v_t0) - params.gamma_bg * bias.v_bg;
    lowered.max(params.phi_min)
}

/// Thermionic-emission diode current for barrier `phi_eff` (eV) and junction
/// voltage `v_junction` (V).
///
/// The result is always finite: exponent arguments above [`MAX_EXP_ARG`]
/// saturate.
pub fn diode_current(params: &DeviceParams, phi_eff: f64, v_junction: f64) -> f64 {
    Junction::new(params, phi_eff).current(v_junction)
}

/// Constant gate/box leakage magnitude, A. Never part of the drain current.
pub fn gate_leakage(params: &DeviceParams) -> f64 {
    params.i_gate_leak
}

/// Drain current at `bias`, A.
pub fn drain_current(params: &DeviceParams, bias: &BiasPoint) -> Result<f64, ModelError> {
    debug_assert!(params.validate().is_ok());
    let junction = Junction::new(params, effective_barrier(params, bias));
    junction
        .solve_series(params.series_resistance(), bias.v_ds)
        .map_err(|residual| ModelError::NonConvergence {
            bias: *bias,
            residual,
        })
}

/// KVL residual of the series network at current `i_d`, V.
///
/// Independent re-check of a solution returned by [`drain_current`].
pub fn kvl_residual(params: &DeviceParams, bias: &BiasPoint, i_d: f64) -> f64 {
    let junction = Junction::new(params, effective_barrier(params, bias));
    junction.voltage(i_d) + i_d * params.series_resistance() - bias.v_ds
}

/// dV/dI of the series network at current `i_d`, Ω.
pub fn kvl_slope(params: &DeviceParams, bias: &BiasPoint, i_d: f64) -> f64 {
    let junction = Junction::new(params, effective_barrier(params, bias));
    junction.dvoltage(i_d) + params.series_resistance()
}

/// Reverse-saturating thermionic junction, worked in the log domain so that
/// barrier heights far above kT never underflow.
#[derive(Debug, Clone, Copy)]
struct Junction {
    /// ln of the saturation current I_s.
    ln_is: f64,
    /// n·kT/q.
    n_vt: f64,
}

impl Junction {
    fn new(params: &DeviceParams, phi_eff: f64) -> Self {
        let vt = params.thermal_voltage();
        let prefactor = params.a_eff * params.a_star * params.temperature * params.temperature;
        Self {
            ln_is: prefactor.ln() - phi_eff / vt,
            n_vt: params.n_ideality * vt,
        }
    }

    fn saturation_current(&self) -> f64 {
        self.ln_is.min(MAX_EXP_ARG).exp()
    }

    /// I_s·(exp(v/nVt) − 1).
    fn current(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        let x = (v / self.n_vt).min(MAX_EXP_ARG);
        if x > 0.0 {
            if self.ln_is > -MAX_EXP_ARG {
                let direct = self.saturation_current() * x.exp_m1();
                if direct.is_finite() {
                    return direct;
                }
            }
            let ln_expm1 = if x > 30.0 {
                x + (-(-x).exp()).ln_1p()
            } else {
                x.exp_m1().ln()
            };
            (self.ln_is + ln_expm1).min(MAX_EXP_ARG).exp()
        } else {
            self.saturation_current() * x.exp_m1()
        }
    }

    /// Inverse of [`Junction::current`]: n·Vt·ln(1 + i/I_s).
    fn voltage(&self, i: f64) -> f64 {
        if i == 0.0 {
            0.0
        } else if i > 0.0 {
            // ln i − ln I_s loses ~|ln I_s|·ε absolutely; divide while I_s is a
            // normal float and the ratio is finite.
            let ratio = if self.ln_is > -MAX_EXP_ARG {
                i / self.saturation_current()
            } else {
                f64::INFINITY
            };
            if ratio.is_finite() {
                self.n_vt * ratio.ln_1p()
            } else {
                self.n_vt * softplus(i.ln() - self.ln_is)
            }
        } else {
            // Plain division keeps 1 − ratio accurate near reverse saturation.
            let ratio = if self.ln_is > -MAX_EXP_ARG {
                -i / self.saturation_current()
            } else {
                ((-i).ln() - self.ln_is).exp()
            };
            if ratio >= 1.0 {
                f64::NEG_INFINITY
            } else {
                self.n_vt * (-ratio).ln_1p()
            }
        }
    }

    fn dvoltage(&self, i: f64) -> f64 {
        self.n_vt / (i + self.saturation_current())
    }

    /// Solves `voltage(I) + I·r = v` for `I`. On failure returns the best
    /// residual reached.
    fn solve_series(&self, r: f64, v: f64) -> Result<f64, f64> {
        if v == 0.0 {
            return Ok(0.0);
        }
        if r == 0.0 {
            return Ok(self.current(v));
        }
        let tol = RESIDUAL_TOLERANCE * v.abs().max(1.0);
        let g = |i: f64| self.voltage(i) + i * r - v;

        // g(lo) <= 0 <= g(hi) on entry. The diode-only bounds are tight but
        // carry rounding error; when one lands on the wrong side of the root
        // fall back to a bound whose sign is certain.
        let (mut lo, mut hi, mut i) = if v > 0.0 {
            let mut hi = (v / r).min(self.current(v));
            if g(hi) < 0.0 {
                hi = v / r;
            }
            let mut lo = (0.5 * v / r).min(self.current(0.5 * v));
            if g(lo) > 0.0 {
                lo = 0.0;
            }
            (lo, hi, hi)
        } else {
            let mut lo = (v / r).max(self.current(v));
            if g(lo) > 0.0 {
                // The junction voltage diverges at -I_s, so g < 0 there.
                lo = (v / r).max(-self.saturation_current());
            }
            (lo, 0.0, lo)
        };

        let mut best = (f64::INFINITY, i);
        for _ in 0..MAX_SOLVER_ITERATIONS {
            let gi = g(i);
            if gi.abs() < best.0 {
                best = (gi.abs(), i);
            }
            if gi.abs() <= tol {
                return Ok(i);
            }
            if gi > 0.0 {
                hi = i;
            } else {
                lo = i;
            }
            if lo.next_up() >= hi {
                // Bracket collapsed onto neighbouring floats.
                return Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi });
            }

            let slope = self.dvoltage(i) + r;
            let candidate = if i > 0.0 {
                // Log-domain step while far from the root: g is convex in ln I.
                let du = gi / (slope * i);
                if du.abs() > 1e-3 {
                    i * (-du).exp()
                } else {
                    i - gi / slope
                }
            } else {
                i - gi / slope
            };
            i = if candidate.is_finite() && candidate > lo && candidate < hi {
                candidate
            } else if lo > 0.0 && hi > 2.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
        }
        let gi = g(i);
        if gi.abs() <= tol {
            Ok(i)
        } else {
            Err(best.0.min(gi.abs()))
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 36.0 {
        x + (-x).exp()
    } else if x < -36.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

fn check_sweep(values: &[f64]) -> Result<(), ModelError> {
    if values.is_empty() {
        return Err(ModelError::InvalidSweep("sweep is empty".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::InvalidSweep(
            "sweep has non-finite values".into(),
        ));
    }
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(ModelError::InvalidSweep(
            "sweep must be strictly monotone".into(),
        ));
    }
    Ok(())
}

/// I_D–V_TG sweep at fixed `v_bg` and `v_ds`.
pub fn transfer_curve(
    params: &DeviceParams,
    v_tg_sweep: &[f64],
    v_bg: f64,
    v_ds: f64,
) -> Result<IvCurve, ModelError> {
    check_sweep(v_tg_sweep)?;
    let mut curve = IvCurve::new();
    curve.set_meta("sweep", "v_tg");
    for &v_tg in v_tg_sweep {
        let bias = BiasPoint::new(v_tg, v_bg, v_ds);
        curve.push(bias, drain_current(params, &bias)?);
    }
    Ok(curve)
}

/// I_D–V_DS sweep at fixed gate biases.
pub fn output_curve(
    params: &DeviceParams,
    v_ds_sweep: &[f64],
    v_tg: f64,
    v_bg: f64,
) -> Result<IvCurve, ModelError> {
    check_sweep(v_ds_sweep)?;
    let mut curve = IvCurve::new();
    curve.set_meta("sweep", "v_ds");
    for &v_ds in v_ds_sweep {
        let bias = BiasPoint::new(v_tg, v_bg, v_ds);
        curve.push(bias, drain_current(params, &bias)?);
    }
    Ok(curve)
}

/// I_D–V_BG sweep at fixed top gate and drain biases.
pub fn back_gate_curve(
    params: &DeviceParams,
    v_bg_sweep: &[f64],
    v_tg: f64,
    v_ds: f64,
) -> Result<IvCurve, ModelError> {
    check_sweep(v_bg_sweep)?;
    let mut curve = IvCurve::new();
    curve.set_meta("sweep", "v_bg");
    for &v_bg in v_bg_sweep {
        let bias = BiasPoint::new(v_tg, v_bg, v_ds);
        curve.push(bias, drain_current(params, &bias)?);
    }
    Ok(curve)
}

/// On-current for each gate length, returned as `(1/l_g, i_on)` pairs.
pub fn ion_vs_inverse_length(
    params: &DeviceParams,
    lengths: &[f64],
    bias: &BiasPoint,
) -> Result<Vec<(f64, f64)>, ModelError> {
    lengths
        .iter()
        .map(|&l_g| {
            if !(l_g > 0.0 && l_g.is_finite()) {
                return Err(ModelError::InvalidParams(format!(
                    "gate length {l_g} must be positive"
                )));
            }
            let p = DeviceParams { l_g, ..*params };
            Ok((1.0 / l_g, drain_current(&p, bias)?))
        })
        .collect()
}

/// Bias used for the channel-limited I_ON-vs-1/L_G table: the top gate is
/// far enough past `v_t0` to hold the barrier at its floor.
pub fn ion_preset_bias(params: &DeviceParams) -> BiasPoint {
    let full_lowering = (params.phi_b0 - params.phi_min) / params.gamma_tg;
    BiasPoint::new(params.v_t0 + full_lowering + 1.0, 0.0, 1.0)
}

/// Constant-current threshold extraction settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    /// Threshold current, A.
    pub i_crit: f64,
    /// Drain bias of the transfer curve, V.
    pub v_ds: f64,
    /// Search half-width around `v_t0`, V.
    pub half_window: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            i_crit: 1e-9,
            v_ds: 0.1,
            half_window: 20.0,
        }
    }
}

/// Top-gate voltage at which the drain current equals `opts.i_crit`.
pub fn constant_current_threshold(
    params: &DeviceParams,
    v_bg: f64,
    opts: &ThresholdOptions,
) -> Result<f64, ModelError> {
    let mut a = params.v_t0 - opts.half_window;
    let mut b = params.v_t0 + opts.half_window;
    let current = |v_tg: f64| drain_current(params, &BiasPoint::new(v_tg, v_bg, opts.v_ds));
    let out_of_range = ModelError::ThresholdOutOfRange {
        i_crit: opts.i_crit,
        v_lo: a,
        v_hi: b,
    };
    if current(a)? > opts.i_crit || current(b)? < opts.i_crit {
        return Err(out_of_range);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if current(mid)? < opts.i_crit {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Shift of the 1 nA constant-current threshold at `v_bg` relative to
/// `v_bg = 0`, V.
pub fn back_gate_vt_shift(params: &DeviceParams, v_bg: f64) -> Result<f64, ModelError> {
    back_gate_vt_shift_with(params, v_bg, &ThresholdOptions::default())
}

pub fn back_gate_vt_shift_with(
    params: &DeviceParams,
    v_bg: f64,
    opts: &ThresholdOptions,
) -> Result<f64, ModelError> {
    if v_bg == 0.0 {
        return Ok(0.0);
    }
    let reference = constant_current_threshold(params, 0.0, opts)?;
    Ok(constant_current_threshold(params, v_bg, opts)? - reference)
}
