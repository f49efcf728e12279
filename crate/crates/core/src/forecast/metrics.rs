//! Backtest error metrics.

use super::{ForecastError, Result};
use crate::numeric::compensated_sum;

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(ForecastError::Argument(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(ForecastError::Argument("no values to score".into()));
    }
    Ok(())
}

/// Σ|actual − predicted| ÷ Σactual.
pub fn error_rate(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(actual, predicted)?;
    let total = compensated_sum(actual.iter().copied());
    if total <= 0.0 || !total.is_finite() {
        return Err(ForecastError::UndefinedMetric(
            "error rate needs a positive sum of actual values".into(),
        ));
    }
    let abs_err = compensated_sum(actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()));
    Ok(abs_err / total)
}

/// Population standard deviation of the errors `actual − predicted`.
pub fn error_stddev(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(actual, predicted)?;
    let n = actual.len() as f64;
    let errors: Vec<f64> = actual.iter().zip(predicted).map(|(a, p)| a - p).collect();
    let mean = compensated_sum(errors.iter().copied()) / n;
    let var = compensated_sum(errors.iter().map(|e| (e - mean) * (e - mean))) / n;
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn error_rate_examples() {
        assert!((error_rate(&[10.0, 10.0], &[9.0, 11.0]).unwrap() - 0.10).abs() < 1e-15);
        assert_eq!(error_rate(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(error_rate(&[100.0], &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn error_rate_failures() {
        assert!(matches!(
            error_rate(&[1.0], &[1.0, 2.0]),
            Err(ForecastError::Argument(_))
        ));
        assert!(matches!(
            error_rate(&[0.0, 0.0], &[1.0, 2.0]),
            Err(ForecastError::UndefinedMetric(_))
        ));
        assert!(matches!(error_rate(&[], &[]), Err(ForecastError::Argument(_))));
    }

    #[test]
    fn stddev_examples() {
        // errors +1, -1
        assert_eq!(error_stddev(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(error_stddev(&[5.0, 6.0], &[5.0, 6.0]).unwrap(), 0.0);
        // errors 2, 4, 6
        let s = error_stddev(&[12.0, 14.0, 16.0], &[10.0, 10.0, 10.0]).unwrap();
        assert!((s - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s - 1.63299).abs() < 1e-5);
        assert!(error_stddev(&[1.0], &[]).is_err());
    }

    proptest! {
        #[test]
        fn scale_behaviour(pairs in prop::collection::vec((1.0f64..1e4, 0.0f64..1e4), 1..12), k in 0.01f64..100.0) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let ka: Vec<f64> = a.iter().map(|v| v * k).collect();
            let kp: Vec<f64> = p.iter().map(|v| v * k).collect();
            let r0 = error_rate(&a, &p).unwrap();
            let r1 = error_rate(&ka, &kp).unwrap();
            prop_assert!((r0 - r1).abs() <= 1e-12 * r0.max(1.0));
            let s0 = error_stddev(&a, &p).unwrap();
            let s1 = error_stddev(&ka, &kp).unwrap();
            prop_assert!((s0 * k - s1).abs() <= 1e-9 * (s1.abs() + 1.0));
        }
    }
}
