//! Synthetic measurement data for calibration round trips.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::sbmodel::{IvCurve, IvRecord};

/// Multiplies every current by `1 + rel·N(0, 1)`, seeded.
pub fn add_multiplicative_noise(curves: &[IvCurve], rel: f64, seed: u64) -> Vec<IvCurve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, rel.max(0.0)).expect("finite sigma");
    curves
        .iter()
        .map(|c| {
            let records = c
                .records()
                .iter()
                .map(|r| IvRecord {
                    bias: r.bias,
                    i_d: r.i_d * (1.0 + normal.sample(&mut rng)),
                })
                .collect();
            let mut noisy = IvCurve::from_records(records);
            noisy.meta = c.meta.clone();
            noisy
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbmodel::BiasPoint;

    #[test]
    fn seeded_and_relative() {
        let mut c = IvCurve::new();
        for k in 1..200 {
            c.push(BiasPoint::new(k as f64, 0.0, 1.0), 1e-9 * k as f64);
        }
        let a = add_multiplicative_noise(std::slice::from_ref(&c), 0.01, 7);
        let b = add_multiplicative_noise(std::slice::from_ref(&c), 0.01, 7);
        assert_eq!(a, b);
        let rms = (a[0]
            .records()
            .iter()
            .zip(c.records())
            .map(|(n, r)| (n.i_d / r.i_d - 1.0).powi(2))
            .sum::<f64>()
            / 199.0)
            .sqrt();
        assert!(rms > 0.007 && rms < 0.013, "{rms}");
    }
}
