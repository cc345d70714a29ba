use crate::channel::FrequencyChannel;
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Floor applied to exact recoveries so dB averages stay finite.
pub const NMSE_FLOOR_DB: f64 = -120.0;

/// `10·log10(Σ_k ‖Ĥ[k] − H[k]‖² / Σ_k ‖H[k]‖²)`, clamped below at −120 dB.
pub fn nmse(estimates: &[CMat], truth: &FrequencyChannel) -> Result<f64> {
    if estimates.len() != truth.per_subcarrier.len() {
        return Err(Error::InvalidDimension(format!(
            "{} estimates for {} subcarriers",
            estimates.len(),
            truth.per_subcarrier.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (est, h) in estimates.iter().zip(&truth.per_subcarrier) {
        if est.shape() != h.shape() {
            return Err(Error::InvalidDimension(format!(
                "estimate is {}x{}, channel is {}x{}",
                est.nrows(),
                est.ncols(),
                h.nrows(),
                h.ncols()
            )));
        }
        num += (est - h).norm_squared();
        den += h.norm_squared();
    }
    if den == 0.0 {
        return Err(Error::UndefinedMetric("channel has zero energy".into()));
    }
    let db = 10.0 * (num / den).log10();
    if db.is_nan() {
        return Err(Error::UndefinedMetric("non-finite estimate".into()));
    }
    Ok(db.max(NMSE_FLOOR_DB))
}

/// Mean and standard error of the mean (sample standard deviation / √n).
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn truth() -> FrequencyChannel {
        FrequencyChannel {
            per_subcarrier: vec![
                CMat::from_fn(2, 3, |i, j| Complex64::new(i as f64 + 1.0, j as f64)),
                CMat::from_fn(2, 3, |i, j| Complex64::new(-(j as f64), i as f64 - 0.5)),
            ],
        }
    }

    #[test]
    fn identities() {
        let t = truth();
        assert_eq!(nmse(&t.per_subcarrier, &t).unwrap(), NMSE_FLOOR_DB);
        let zeros: Vec<CMat> = t.per_subcarrier.iter().map(|h| CMat::zeros(h.nrows(), h.ncols())).collect();
        assert!(nmse(&zeros, &t).unwrap().abs() < 1e-12);
        let doubled: Vec<CMat> = t.per_subcarrier.iter().map(|h| h * Complex64::new(2.0, 0.0)).collect();
        assert!(nmse(&doubled, &t).unwrap().abs() < 1e-12);
        let half: Vec<CMat> = t.per_subcarrier.iter().map(|h| h * Complex64::new(0.9, 0.0)).collect();
        assert!((nmse(&half, &t).unwrap() + 20.0).abs() < 1e-9);
    }

    #[test]
    fn zero_truth_is_undefined() {
        let t = FrequencyChannel {
            per_subcarrier: vec![CMat::zeros(2, 2)],
        };
        assert!(matches!(nmse(&t.per_subcarrier, &t), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let t = truth();
        assert!(nmse(&t.per_subcarrier[..1], &t).is_err());
        let wrong = vec![CMat::zeros(3, 2), CMat::zeros(2, 3)];
        assert!(nmse(&wrong, &t).is_err());
    }

    #[test]
    fn aggregates() {
        let (m, se) = mean_and_std_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_std_error(&[7.0]), (7.0, 0.0));
    }
}
