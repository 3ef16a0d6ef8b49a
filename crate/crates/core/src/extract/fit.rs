use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ExtractError;
use crate::sbmodel::{drain_current, DeviceParams, IvCurve};

pub const FIT_REPORT_SCHEMA: &str = "fit-report-v1";

/// Current floor added inside the log residual, A.
pub const LOG_CURRENT_FLOOR: f64 = 1e-14;

const MAX_ITERATIONS: usize = 200;
const REL_COST_TOL: f64 = 1e-9;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;

/// Compact-model parameters that [`fit_device`] may adjust.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParam {
    PhiB0,
    GammaTg,
    GammaBg,
    VT0,
    NIdeality,
    RhoSheet,
    RSdExt,
}

impl FitParam {
    pub const ALL: [FitParam; 7] = [
        FitParam::PhiB0,
        FitParam::GammaTg,
        FitParam::GammaBg,
        FitParam::VT0,
        FitParam::NIdeality,
        FitParam::RhoSheet,
        FitParam::RSdExt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitParam::PhiB0 => "phi_b0",
            FitParam::GammaTg => "gamma_tg",
            FitParam::GammaBg => "gamma_bg",
            FitParam::VT0 => "v_t0",
            FitParam::NIdeality => "n_ideality",
            FitParam::RhoSheet => "rho_sheet",
            FitParam::RSdExt => "r_sd_ext",
        }
    }

    fn get(self, p: &DeviceParams) -> f64 {
        match self {
            FitParam::PhiB0 => p.phi_b0,
            FitParam::GammaTg => p.gamma_tg,
            FitParam::GammaBg => p.gamma_bg,
            FitParam::VT0 => p.v_t0,
            FitParam::NIdeality => p.n_ideality,
            FitParam::RhoSheet => p.rho_sheet,
            FitParam::RSdExt => p.r_sd_ext,
        }
    }

    fn set(self, p: &mut DeviceParams, v: f64) {
        match self {
            FitParam::PhiB0 => p.phi_b0 = v,
            FitParam::GammaTg => p.gamma_tg = v,
            FitParam::GammaBg => p.gamma_bg = v,
            FitParam::VT0 => p.v_t0 = v,
            FitParam::NIdeality => p.n_ideality = v,
            FitParam::RhoSheet => p.rho_sheet = v,
            FitParam::RSdExt => p.r_sd_ext = v,
        }
    }

    /// Box constraints enforced by projection.
    fn bounds(self, p: &DeviceParams) -> (f64, f64) {
        match self {
            FitParam::PhiB0 => (p.phi_min, 5.0),
            FitParam::GammaTg => (1e-6, 10.0),
            FitParam::GammaBg => (-10.0, 10.0),
            FitParam::VT0 => (-100.0, 100.0),
            FitParam::NIdeality => (1.0, 100.0),
            FitParam::RhoSheet => (0.0, 1e20),
            FitParam::RSdExt => (0.0, 1e20),
        }
    }

    /// Magnitude used to size finite-difference steps near zero.
    fn typical(self) -> f64 {
        match self {
            FitParam::PhiB0 | FitParam::VT0 | FitParam::NIdeality => 0.1,
            FitParam::GammaTg | FitParam::GammaBg => 0.01,
            FitParam::RhoSheet | FitParam::RSdExt => 1.0,
        }
    }
}

impl fmt::Display for FitParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitParam {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FitParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ExtractError::UnknownParameter(s.to_string()))
    }
}

/// Outcome of a compact-model calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema: String,
    pub fitted: DeviceParams,
    pub free: Vec<FitParam>,
    pub initial_rms_log: f64,
    /// RMS of the log10-current residuals at `fitted`, decades.
    pub residual_rms_log: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit report serialize")
    }
}

fn log_residuals(params: &DeviceParams, curves: &[IvCurve]) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    for curve in curves {
        for rec in curve.records() {
            let model = drain_current(params, &rec.bias).ok()?;
            out.push(
                (model.abs() + LOG_CURRENT_FLOOR).log10()
                    - (rec.i_d.abs() + LOG_CURRENT_FLOOR).log10(),
            );
        }
    }
    Some(out)
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn rms(r: &[f64]) -> f64 {
    if r.is_empty() {
        0.0
    } else {
        (sum_sq(r) / r.len() as f64).sqrt()
    }
}

/// Calibrates the `free` parameters of `initial` against measured curves.
///
/// Levenberg–Marquardt on log10-current residuals with a forward-difference
/// Jacobian and Marquardt diagonal scaling. The damping factor is divided
/// by 10 after an accepted step and multiplied by 10 after a rejected one.
/// Iteration stops when an accepted step changes the cost by less than 1e-9
/// relative, when no damping level yields a descent, or after 200 steps; in
/// the last case the best point so far is returned with `converged = false`.
pub fn fit_device(
    curves: &[IvCurve],
    initial: &DeviceParams,
    free: &[FitParam],
) -> Result<FitReport, ExtractError> {
    if curves.is_empty() || curves.iter().all(|c| c.is_empty()) {
        return Err(ExtractError::InvalidInput("no measured curves".into()));
    }
    initial.validate()?;
    let mut free: Vec<FitParam> = free.to_vec();
    free.sort();
    free.dedup();

    let mut params = *initial;
    let mut r = log_residuals(&params, curves).ok_or_else(|| {
        ExtractError::InvalidInput("model fails to evaluate at the initial parameters".into())
    })?;
    let initial_rms_log = rms(&r);
    let mut cost = sum_sq(&r);

    let report = |params: DeviceParams, r: Vec<f64>, iterations, converged| FitReport {
        schema: FIT_REPORT_SCHEMA.into(),
        fitted: params,
        free: free.clone(),
        initial_rms_log,
        residual_rms_log: rms(&r),
        iterations,
        converged,
        residuals: r,
    };

    if free.is_empty() {
        return Ok(report(params, r, 0, true));
    }

    let m = r.len();
    let n = free.len();
    let mut lambda = LAMBDA_INIT;
    for iter in 1..=MAX_ITERATIONS {
        // Forward-difference Jacobian of the residual vector.
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for (col, &fp) in free.iter().enumerate() {
            let x = fp.get(&params);
            let (lo, hi) = fp.bounds(&params);
            let mut h = 1e-6 * x.abs().max(fp.typical());
            if x + h > hi {
                h = -h;
            }
            let mut shifted = params;
            fp.set(&mut shifted, (x + h).max(lo));
            let h = fp.get(&shifted) - x;
            let rs = log_residuals(&shifted, curves).ok_or_else(|| {
                ExtractError::DegenerateFit("model failed inside Jacobian".into())
            })?;
            for row in 0..m {
                jac[(row, col)] = (rs[row] - r[row]) / h;
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * DVector::from_column_slice(&r);

        let mut accepted = None;
        while lambda <= LAMBDA_MAX {
            let mut lhs = jtj.clone();
            for k in 0..n {
                lhs[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let step = lhs.lu().solve(&(-&jtr));
            if let Some(step) = step {
                let mut trial = params;
                for (k, &fp) in free.iter().enumerate() {
                    let (lo, hi) = fp.bounds(&trial);
                    fp.set(&mut trial, (fp.get(&params) + step[k]).clamp(lo, hi));
                }
                // phi_b0 bound depends on phi_min which is not free here.
                if trial.validate().is_ok() {
                    if let Some(rt) = log_residuals(&trial, curves) {
                        let ct = sum_sq(&rt);
                        if ct < cost {
                            accepted = Some((trial, rt, ct));
                            lambda = (lambda / 10.0).max(1e-12);
                            break;
                        }
                    }
                }
            }
            lambda *= 10.0;
        }

        match accepted {
            None => return Ok(report(params, r, iter, true)),
            Some((p_new, r_new, c_new)) => {
                let rel = (cost - c_new) / cost.max(f64::MIN_POSITIVE);
                params = p_new;
                r = r_new;
                cost = c_new;
                if rel < REL_COST_TOL || cost == 0.0 {
                    return Ok(report(params, r, iter, true));
                }
            }
        }
    }
    Ok(report(params, r, MAX_ITERATIONS, false))
}
