use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ExtractError;
use crate::sbmodel::{transfer_curve, DeviceParams, IvCurve};

pub const VCCS_SCHEMA: &str = "vccs-v1";

/// Calibrated gate-voltage to current map of the transistor used as a
/// current source.
///
/// Continuous piecewise-linear through `knots`, non-negative and
/// non-decreasing; constant beyond the first and last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct VccsModel {
    knots: Vec<(f64, f64)>,
}

impl VccsModel {
    /// Builds a model from explicit knots. Knot voltages must be strictly
    /// increasing and currents non-negative and non-decreasing.
    pub fn from_knots(knots: Vec<(f64, f64)>) -> Result<Self, ExtractError> {
        if knots.len() < 2 {
            return Err(ExtractError::TooFewPoints {
                need: 2,
                got: knots.len(),
            });
        }
        if knots.iter().any(|k| !(k.0.is_finite() && k.1.is_finite())) {
            return Err(ExtractError::InvalidInput("non-finite knot".into()));
        }
        if !knots.windows(2).all(|w| w[1].0 > w[0].0) {
            return Err(ExtractError::InvalidInput(
                "knot voltages must be strictly increasing".into(),
            ));
        }
        if knots.iter().any(|k| k.1 < 0.0) || !knots.windows(2).all(|w| w[1].1 >= w[0].1) {
            return Err(ExtractError::InvalidInput(
                "knot currents must be non-negative and non-decreasing".into(),
            ));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn valid_range(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    /// Largest current the map can deliver.
    pub fn max_current(&self) -> f64 {
        self.knots[self.knots.len() - 1].1
    }

    /// Current at `v_tg`, A.
    pub fn eval(&self, v_tg: f64) -> f64 {
        let (lo, hi) = self.valid_range();
        if v_tg <= lo {
            return self.knots[0].1;
        }
        if v_tg >= hi {
            return self.max_current();
        }
        let k = self.knots.partition_point(|kn| kn.0 <= v_tg);
        let (v0, i0) = self.knots[k - 1];
        let (v1, i1) = self.knots[k];
        let t = (v_tg - v0) / (v1 - v0);
        i0 + t * (i1 - i0)
    }

    /// Lowest knot voltage at which the map delivers a positive current.
    pub fn turn_on(&self) -> Option<f64> {
        let k = self.knots.iter().position(|kn| kn.1 > 0.0)?;
        Some(if k == 0 {
            self.knots[0].0
        } else {
            self.knots[k - 1].0
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("vccs serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ExtractError> {
        let doc: VccsDoc =
            serde_json::from_str(text).map_err(|e| ExtractError::InvalidInput(e.to_string()))?;
        Self::from_doc(doc)
    }

    pub(crate) fn to_doc(&self) -> VccsDoc {
        let (lo, hi) = self.valid_range();
        VccsDoc {
            schema: VCCS_SCHEMA.into(),
            knots: self.knots.iter().map(|&(v, i)| [v, i]).collect(),
            valid_range: [lo, hi],
            extrapolation: "clamp".into(),
        }
    }

    pub(crate) fn from_doc(doc: VccsDoc) -> Result<Self, ExtractError> {
        if doc.schema != VCCS_SCHEMA {
            return Err(ExtractError::InvalidInput(format!(
                "unexpected schema {:?}, want {VCCS_SCHEMA:?}",
                doc.schema
            )));
        }
        if doc.extrapolation != "clamp" {
            return Err(ExtractError::InvalidInput(format!(
                "unsupported extrapolation {:?}",
                doc.extrapolation
            )));
        }
        let model = Self::from_knots(doc.knots.iter().map(|k| (k[0], k[1])).collect())?;
        let (lo, hi) = model.valid_range();
        if doc.valid_range != [lo, hi] {
            return Err(ExtractError::InvalidInput(
                "valid_range does not match the knot span".into(),
            ));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct VccsDoc {
    pub schema: String,
    pub knots: Vec<[f64; 2]>,
    pub valid_range: [f64; 2],
    pub extrapolation: String,
}

impl Serialize for VccsModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for VccsModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = VccsDoc::deserialize(d)?;
        Self::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

/// Least-squares piecewise-linear fit of `i_d` against `v_tg` on `n_knots`
/// uniformly spaced knots, projected onto non-decreasing, non-negative
/// knot values.
pub fn fit_vccs(curve: &IvCurve, n_knots: usize) -> Result<VccsModel, ExtractError> {
    if n_knots < 2 {
        return Err(ExtractError::TooFewPoints {
            need: 2,
            got: n_knots,
        });
    }
    if curve.len() < n_knots {
        return Err(ExtractError::TooFewPoints {
            need: n_knots,
            got: curve.len(),
        });
    }
    let recs = curve.records();
    if recs.iter().any(|r| r.bias.v_ds != recs[0].bias.v_ds) {
        return Err(ExtractError::NonUniformBias("v_ds"));
    }
    let mut data: Vec<(f64, f64)> = recs.iter().map(|r| (r.bias.v_tg, r.i_d)).collect();
    data.sort_by(|a, b| a.0.total_cmp(&b.0));
    let v_min = data[0].0;
    let v_max = data[data.len() - 1].0;
    if !(v_max > v_min) {
        return Err(ExtractError::DegenerateFit("v_tg span is zero".into()));
    }
    let h = (v_max - v_min) / (n_knots - 1) as f64;
    let grid: Vec<f64> = (0..n_knots)
        .map(|k| {
            if k == n_knots - 1 {
                v_max
            } else {
                v_min + k as f64 * h
            }
        })
        .collect();

    // Hat-function design matrix.
    let mut a = DMatrix::<f64>::zeros(data.len(), n_knots);
    for (row, &(v, _)) in data.iter().enumerate() {
        let k = ((v - v_min) / h).floor().clamp(0.0, (n_knots - 2) as f64) as usize;
        let t = ((v - grid[k]) / (grid[k + 1] - grid[k])).clamp(0.0, 1.0);
        a[(row, k)] += 1.0 - t;
        a[(row, k + 1)] += t;
    }
    let y = DVector::from_iterator(data.len(), data.iter().map(|d| d.1));
    let ata = a.transpose() * &a;
    let aty = a.transpose() * y;
    let coeffs = match ata.clone().cholesky() {
        Some(ch) => ch.solve(&aty),
        None => {
            // Knots without data support: tie them to their neighbours with a
            // small second-difference penalty.
            let mut reg = ata;
            let scale = 1e-9 * reg.diagonal().max().max(1e-300);
            for k in 1..n_knots - 1 {
                let d = [(k - 1, 1.0), (k, -2.0), (k + 1, 1.0)];
                for &(i, ci) in &d {
                    for &(j, cj) in &d {
                        reg[(i, j)] += scale * ci * cj;
                    }
                }
            }
            reg.cholesky()
                .ok_or_else(|| ExtractError::DegenerateFit("singular knot system".into()))?
                .solve(&aty)
        }
    };

    let monotone = isotonic(coeffs.as_slice());
    let knots = grid
        .into_iter()
        .zip(monotone)
        .map(|(v, i)| (v, i.max(0.0)))
        .collect();
    VccsModel::from_knots(knots)
}

/// Fits a map to a simulated transfer sweep of `params` over
/// `[v_lo, v_hi]` (`n_samples` points) at fixed `v_bg` and `v_ds`.
pub fn calibrate_vccs(
    params: &DeviceParams,
    (v_lo, v_hi): (f64, f64),
    n_samples: usize,
    v_bg: f64,
    v_ds: f64,
    n_knots: usize,
) -> Result<VccsModel, ExtractError> {
    if !(v_hi > v_lo) || n_samples < 2 {
        return Err(ExtractError::InvalidInput(
            "need v_lo < v_hi and >= 2 samples".into(),
        ));
    }
    let step = (v_hi - v_lo) / (n_samples - 1) as f64;
    let sweep: Vec<f64> = (0..n_samples).map(|k| v_lo + k as f64 * step).collect();
    let curve = transfer_curve(params, &sweep, v_bg, v_ds)?;
    fit_vccs(&curve, n_knots)
}

/// Pool-adjacent-violators projection onto non-decreasing sequences.
fn isotonic(values: &[f64]) -> Vec<f64> {
    // (block mean, block size)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m1, n1) = blocks[blocks.len() - 1];
            let (m0, n0) = blocks[blocks.len() - 2];
            if m0 <= m1 {
                break;
            }
            blocks.pop();
            let n = n0 + n1;
            *blocks.last_mut().unwrap() = ((m0 * n0 as f64 + m1 * n1 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat_n(m, n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbmodel::BiasPoint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn curve_of(points: &[(f64, f64)]) -> IvCurve {
        let mut c = IvCurve::new();
        for &(v, i) in points {
            c.push(BiasPoint::new(v, 0.0, 2.5), i);
        }
        c
    }

    fn truth(v: f64) -> f64 {
        // PWL on the 5-knot grid over [0, 4].
        let knots = [
            (0.0, 0.0),
            (1.0, 1e-9),
            (2.0, 5e-9),
            (3.0, 2e-8),
            (4.0, 3e-8),
        ];
        VccsModel::from_knots(knots.to_vec()).unwrap().eval(v)
    }

    #[test]
    fn reproduces_pwl_on_grid() {
        let pts: Vec<(f64, f64)> = (0..=40)
            .map(|k| (k as f64 * 0.1, truth(k as f64 * 0.1)))
            .collect();
        let m = fit_vccs(&curve_of(&pts), 5).unwrap();
        for &(v, i) in &pts {
            assert!((m.eval(v) - i).abs() <= 1e-20, "v={v}");
        }
    }

    #[test]
    fn noisy_fit_beats_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sigma = 1e-9;
        let noise = Normal::new(0.0, sigma).unwrap();
        let pts: Vec<(f64, f64)> = (0..=400)
            .map(|k| {
                let v = k as f64 * 0.01;
                (v, truth(v) + noise.sample(&mut rng))
            })
            .collect();
        let m = fit_vccs(&curve_of(&pts), 5).unwrap();
        let n = pts.len() as f64;
        let noise_rms = (pts
            .iter()
            .map(|&(v, i)| (i - truth(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let fit_rms = (pts
            .iter()
            .map(|&(v, _)| (m.eval(v) - truth(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        assert!(fit_rms <= noise_rms, "{fit_rms} > {noise_rms}");
    }

    #[test]
    fn decreasing_data_projects_to_constant() {
        let pts: Vec<(f64, f64)> = (0..=20)
            .map(|k| (k as f64 * 0.1, 5e-9 - k as f64 * 1e-10))
            .collect();
        let m = fit_vccs(&curve_of(&pts), 4).unwrap();
        let first = m.knots()[0].1;
        assert!(m
            .knots()
            .iter()
            .all(|k| (k.1 - first).abs() <= 1e-15 * first));
    }

    #[test]
    fn output_monotone_and_non_negative() {
        let pts: Vec<(f64, f64)> = (0..=60)
            .map(|k| {
                let v = k as f64 * 0.05;
                (v, (3.0 * v).sin() * 1e-9 + 2e-10 * v - 5e-10)
            })
            .collect();
        let m = fit_vccs(&curve_of(&pts), 8).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=10_000 {
            let v = -1.0 + k as f64 * 5e-4;
            let i = m.eval(v);
            assert!(i >= 0.0 && i >= prev);
            prev = i;
        }
    }

    #[test]
    fn clamps_outside_range() {
        let m = VccsModel::from_knots(vec![(1.0, 1e-9), (2.0, 3e-9)]).unwrap();
        assert_eq!(m.eval(-5.0), 1e-9);
        assert_eq!(m.eval(9.0), 3e-9);
        assert!((m.eval(1.5) - 2e-9).abs() < 1e-24);
    }

    #[test]
    fn too_few_points() {
        let c = curve_of(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!(matches!(
            fit_vccs(&c, 3),
            Err(ExtractError::TooFewPoints { .. })
        ));
        assert!(matches!(
            fit_vccs(&c, 1),
            Err(ExtractError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn sparse_knots_still_fit() {
        // Five points but eight knots' worth of demand is rejected; five
        // points on five knots with a gap still solves.
        let c = curve_of(&[
            (0.0, 0.0),
            (0.1, 0.0),
            (0.2, 1e-9),
            (3.9, 2e-9),
            (4.0, 2e-9),
        ]);
        let m = fit_vccs(&c, 5).unwrap();
        assert!(m.knots().windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn json_schema() {
        let m = VccsModel::from_knots(vec![(0.0, 0.0), (1.0, 2e-9)]).unwrap();
        let text = m.to_json();
        assert!(text.contains("\"schema\": \"vccs-v1\""));
        assert_eq!(VccsModel::from_json(&text).unwrap(), m);
        let bad = text.replace("vccs-v1", "vccs-v0");
        assert!(VccsModel::from_json(&bad).is_err());
    }
}
