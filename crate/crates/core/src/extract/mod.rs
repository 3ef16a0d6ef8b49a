//! Parameter extraction from transfer and output sweeps.
//!
//! The small-signal extractions (g_m, µ_eff, R_SD, V_T) are the standard
//! linear-region methods. [`fit_device`] calibrates the compact model against
//! whole curves and [`fit_vccs`] builds the monotone voltage-to-current map
//! that drives the neuron.

mod fit;
pub mod synth;
mod vccs;

pub use fit::{fit_device, FitParam, FitReport, FIT_REPORT_SCHEMA, LOG_CURRENT_FLOOR};
pub use vccs::{calibrate_vccs, fit_vccs, VccsModel, VCCS_SCHEMA};

use thiserror::Error;

use crate::sbmodel::{DeviceParams, IvCurve, ModelError};
use crate::stats::{fit_line, LineFit};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExtractError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("{0} varies within a curve that must hold it fixed")]
    NonUniformBias(&'static str),
    #[error("swept voltage must be strictly monotone")]
    NonMonotone,
    #[error("v_ds must be non-zero")]
    ZeroVds,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown fit parameter {0:?}")]
    UnknownParameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Device geometry needed by the mobility extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub l_g: f64,
    pub w: f64,
    pub c_ox_areal: f64,
}

impl From<&DeviceParams> for Geometry {
    fn from(p: &DeviceParams) -> Self {
        Self {
            l_g: p.l_g,
            w: p.w,
            c_ox_areal: p.c_ox_areal(),
        }
    }
}

/// Everything extracted from one device's sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedParams {
    pub gm_curve: Vec<(f64, f64)>,
    pub mu_eff_curve: Vec<(f64, f64)>,
    pub r_sd: f64,
    pub v_t_extracted: f64,
    pub c_ox_areal: f64,
}

/// Diagnostics of the total-resistance extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct RsdExtraction {
    pub r_sd: f64,
    /// Slope of R_tot against 1/(v_tg − v_t), Ω·V.
    pub slope: f64,
    pub r_squared: f64,
    /// `(1/(v_tg − v_t), R_tot)` per input curve.
    pub points: Vec<(f64, f64)>,
}

fn require_fixed(
    curve: &IvCurve,
    name: &'static str,
    get: impl Fn(usize) -> f64,
) -> Result<(), ExtractError> {
    let first = get(0);
    if (1..curve.len()).any(|k| get(k) != first) {
        return Err(ExtractError::NonUniformBias(name));
    }
    Ok(())
}

fn check_transfer(curve: &IvCurve) -> Result<(), ExtractError> {
    if curve.len() < 3 {
        return Err(ExtractError::TooFewPoints {
            need: 3,
            got: curve.len(),
        });
    }
    let recs = curve.records();
    require_fixed(curve, "v_bg", |k| recs[k].bias.v_bg)?;
    require_fixed(curve, "v_ds", |k| recs[k].bias.v_ds)?;
    let up = recs.windows(2).all(|w| w[1].bias.v_tg > w[0].bias.v_tg);
    let down = recs.windows(2).all(|w| w[1].bias.v_tg < w[0].bias.v_tg);
    if !(up || down) {
        return Err(ExtractError::NonMonotone);
    }
    Ok(())
}

/// Transconductance dI_D/dV_TG by central differences at interior points.
pub fn compute_gm(curve: &IvCurve) -> Result<Vec<(f64, f64)>, ExtractError> {
    check_transfer(curve)?;
    let recs = curve.records();
    Ok(recs
        .windows(3)
        .map(|w| {
            let gm = (w[2].i_d - w[0].i_d) / (w[2].bias.v_tg - w[0].bias.v_tg);
            (w[1].bias.v_tg, gm)
        })
        .collect())
}

/// Linear-region effective mobility µ = g_m·L / (W·C_ox·V_DS), m²/(V·s).
pub fn extract_mobility(
    gm: &[(f64, f64)],
    geom: &Geometry,
    v_ds: f64,
) -> Result<Vec<(f64, f64)>, ExtractError> {
    if v_ds == 0.0 {
        return Err(ExtractError::ZeroVds);
    }
    if !(geom.l_g > 0.0 && geom.w > 0.0 && geom.c_ox_areal > 0.0) {
        return Err(ExtractError::InvalidInput(
            "geometry must be positive".into(),
        ));
    }
    let scale = geom.l_g / (geom.w * geom.c_ox_areal * v_ds);
    Ok(gm.iter().map(|&(v, g)| (v, g * scale)).collect())
}

/// Series resistance by total-resistance extrapolation.
///
/// Each curve is a low-`v_ds` output sweep at one top-gate bias. Its total
/// resistance is the least-squares slope of `v_ds` against `i_d` through the
/// origin. R_tot is then regressed on `1/(v_tg − v_t)`; the intercept is the
/// overdrive-independent part, R_SD.
pub fn extract_rsd(curves: &[IvCurve], v_t: f64) -> Result<RsdExtraction, ExtractError> {
    if curves.len() < 3 {
        return Err(ExtractError::TooFewPoints {
            need: 3,
            got: curves.len(),
        });
    }
    let mut points = Vec::with_capacity(curves.len());
    for curve in curves {
        if curve.len() < 2 {
            return Err(ExtractError::TooFewPoints {
                need: 2,
                got: curve.len(),
            });
        }
        let recs = curve.records();
        require_fixed(curve, "v_tg", |k| recs[k].bias.v_tg)?;
        require_fixed(curve, "v_bg", |k| recs[k].bias.v_bg)?;
        let overdrive = recs[0].bias.v_tg - v_t;
        if overdrive <= 0.0 {
            return Err(ExtractError::InvalidInput(format!(
                "v_tg {} is not above v_t {v_t}",
                recs[0].bias.v_tg
            )));
        }
        let svi: f64 = recs.iter().map(|r| r.bias.v_ds * r.i_d).sum();
        let sii: f64 = recs.iter().map(|r| r.i_d * r.i_d).sum();
        if sii <= 0.0 {
            return Err(ExtractError::DegenerateFit(
                "curve carries no current".into(),
            ));
        }
        points.push((1.0 / overdrive, svi / sii));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(ExtractError::DegenerateFit(
            "fewer than two distinct overdrives".into(),
        ));
    }
    let LineFit {
        slope,
        intercept,
        r_squared,
    } = fit_line(&points)
        .ok_or_else(|| ExtractError::DegenerateFit("collinear overdrives".into()))?;
    Ok(RsdExtraction {
        r_sd: intercept,
        slope,
        r_squared,
        points,
    })
}

/// Threshold voltage by linear extrapolation of the tangent at maximum g_m.
///
/// Among equal g_m maxima the one at the smallest `v_tg` wins.
pub fn extract_vt(curve: &IvCurve) -> Result<f64, ExtractError> {
    let gm = compute_gm(curve)?;
    let recs = curve.records();
    // Interior point k of gm sits at record k + 1.
    let mut best: Option<(usize, f64)> = None;
    for (k, &(v, g)) in gm.iter().enumerate() {
        best = match best {
            None => Some((k, g)),
            Some((bk, bg)) => {
                let bv = gm[bk].0;
                if g > bg || (g == bg && v < bv) {
                    Some((k, g))
                } else {
                    Some((bk, bg))
                }
            }
        };
    }
    let (k, g_max) = best.expect("at least one interior point");
    if !(g_max > 0.0) {
        return Err(ExtractError::DegenerateFit(
            "transconductance is never positive".into(),
        ));
    }
    let rec = recs[k + 1];
    Ok(rec.bias.v_tg - rec.i_d / g_max)
}

/// Runs the full small-signal extraction on one transfer curve plus a set
/// of low-`v_ds` output curves.
pub fn extract_parameters(
    transfer: &IvCurve,
    low_vds: &[IvCurve],
    geom: &Geometry,
) -> Result<ExtractedParams, ExtractError> {
    let gm_curve = compute_gm(transfer)?;
    let v_ds = transfer.records()[0].bias.v_ds;
    let mu_eff_curve = extract_mobility(&gm_curve, geom, v_ds)?;
    let v_t = extract_vt(transfer)?;
    let r_sd = extract_rsd(low_vds, v_t)?.r_sd;
    Ok(ExtractedParams {
        gm_curve,
        mu_eff_curve,
        r_sd,
        v_t_extracted: v_t,
        c_ox_areal: geom.c_ox_areal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbmodel::{back_gate_vt_shift, transfer_curve, BiasPoint, EPS_0};

    fn line_curve(a: f64, b: f64) -> IvCurve {
        let mut c = IvCurve::new();
        for k in 0..11 {
            let v = k as f64 * 0.2;
            c.push(BiasPoint::new(v, 0.0, 0.1), a * v + b);
        }
        c
    }

    #[test]
    fn gm_of_line_is_slope() {
        let gm = compute_gm(&line_curve(2e-7, 1e-9)).unwrap();
        assert_eq!(gm.len(), 9);
        for (_, g) in gm {
            assert!((g - 2e-7).abs() <= 1e-20);
        }
    }

    #[test]
    fn gm_needs_three_points() {
        let mut c = IvCurve::new();
        c.push(BiasPoint::new(0.0, 0.0, 0.1), 0.0);
        c.push(BiasPoint::new(1.0, 0.0, 0.1), 1.0);
        assert_eq!(
            compute_gm(&c),
            Err(ExtractError::TooFewPoints { need: 3, got: 2 })
        );
    }

    #[test]
    fn gm_rejects_varying_bias() {
        let mut c = line_curve(1.0, 0.0);
        c.push(BiasPoint::new(5.0, 0.0, 0.2), 5.0);
        assert_eq!(compute_gm(&c), Err(ExtractError::NonUniformBias("v_ds")));
    }

    #[test]
    fn gm_matches_model_derivative() {
        // Richardson-extrapolated derivative of the model is the oracle.
        let p = DeviceParams::default();
        let v_ds = 0.1;
        let step = 0.01;
        let sweep: Vec<f64> = (0..=200).map(|k| 2.0 + k as f64 * step).collect();
        let curve = transfer_curve(&p, &sweep, 0.0, v_ds).unwrap();
        let gm = compute_gm(&curve).unwrap();
        let id = |v: f64| crate::sbmodel::drain_current(&p, &BiasPoint::new(v, 0.0, v_ds)).unwrap();
        let deriv = |v: f64| {
            let d = |h: f64| (id(v + h) - id(v - h)) / (2.0 * h);
            let h = 1e-3;
            (4.0 * d(h / 2.0) - d(h)) / 3.0
        };
        for &(v, g) in &gm {
            let exact = deriv(v);
            assert!(
                (g - exact).abs() <= 0.01 * exact.abs(),
                "v={v} gm={g} exact={exact}"
            );
        }
    }

    #[test]
    fn mobility_arithmetic() {
        let geom = Geometry {
            l_g: 10e-6,
            w: 33e-6,
            c_ox_areal: 20.0 * EPS_0 / 16e-9,
        };
        let mu = extract_mobility(&[(1.0, 1e-6), (2.0, 0.0)], &geom, 0.1).unwrap();
        let expect = 1e-6 * 10e-6 / (33e-6 * geom.c_ox_areal * 0.1);
        assert!((mu[0].1 - expect).abs() < 1e-18);
        assert!((mu[0].1 - 2.738e-4).abs() < 1e-6);
        assert_eq!(mu[1].1, 0.0);

        let half = extract_mobility(&[(1.0, 1e-6)], &geom, 0.2).unwrap();
        assert_eq!(half[0].1 * 2.0, mu[0].1);
        assert_eq!(
            extract_mobility(&[(1.0, 1e-6)], &geom, 0.0),
            Err(ExtractError::ZeroVds)
        );
    }

    fn rsd_curves(r_sd: f64, k: f64, v_t: f64) -> Vec<IvCurve> {
        [1.0, 2.0, 3.0, 5.0]
            .iter()
            .map(|&od| {
                let r_tot = r_sd + k / od;
                let mut c = IvCurve::new();
                for v_ds in [0.01, 0.02, 0.03, 0.05] {
                    c.push(BiasPoint::new(v_t + od, 0.0, v_ds), v_ds / r_tot);
                }
                c
            })
            .collect()
    }

    #[test]
    fn rsd_recovers_synthetic_series_resistance() {
        let got = extract_rsd(&rsd_curves(2.5e4, 3e6, 0.7), 0.7).unwrap();
        assert!((got.r_sd - 2.5e4).abs() <= 0.05 * 2.5e4);
        assert!(got.r_squared > 0.999);
    }

    #[test]
    fn rsd_zero_intercept() {
        let k = 3e6;
        let got = extract_rsd(&rsd_curves(0.0, k, 0.7), 0.7).unwrap();
        let span = k / 1.0 - k / 5.0;
        assert!(got.r_sd.abs() <= 0.05 * span);
    }

    #[test]
    fn rsd_identical_curves_degenerate() {
        let c = rsd_curves(1e4, 1e6, 0.0).remove(1);
        let err = extract_rsd(&[c.clone(), c.clone(), c], 0.0).unwrap_err();
        assert!(matches!(err, ExtractError::DegenerateFit(_)));
    }

    #[test]
    fn vt_of_piecewise_line() {
        let mut c = IvCurve::new();
        for k in 0..=20 {
            let v = k as f64 * 0.1;
            let i = if v > 0.7 { 3e-7 * (v - 0.7) } else { 0.0 };
            c.push(BiasPoint::new(v, 0.0, 0.1), i);
        }
        let vt = extract_vt(&c).unwrap();
        assert!((vt - 0.7).abs() < 1e-9, "{vt}");
    }

    #[test]
    fn vt_flat_curve_is_degenerate() {
        let mut c = IvCurve::new();
        for k in 0..5 {
            c.push(BiasPoint::new(k as f64, 0.0, 0.1), 0.0);
        }
        assert!(matches!(
            extract_vt(&c),
            Err(ExtractError::DegenerateFit(_))
        ));
    }

    #[test]
    fn vt_shift_consistent_with_constant_current_shift() {
        let p = DeviceParams::default();
        let sweep: Vec<f64> = (0..=900).map(|k| -1.0 + k as f64 * 0.01).collect();
        let v_bg = 2.0;
        let vt0 = extract_vt(&transfer_curve(&p, &sweep, 0.0, 0.1).unwrap()).unwrap();
        let vt1 = extract_vt(&transfer_curve(&p, &sweep, v_bg, 0.1).unwrap()).unwrap();
        let expect = back_gate_vt_shift(&p, v_bg).unwrap();
        let got = vt1 - vt0;
        assert!(
            (got - expect).abs() <= 0.1 * expect.abs(),
            "{got} vs {expect}"
        );
    }
}
