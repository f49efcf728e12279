use std::collections::VecDeque;

use serde::Serialize;

use super::{ForecastError, Result, SmoothingParams, SmoothingState};
use crate::emissions::{Observation, SectorSeries};

/// Starting state for the recursions.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub level: f64,
    pub trend: f64,
    /// Offsets for the first seasonal cycle, in time order.
    pub seasonal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// One-step-ahead predictions, one per observation from the end of the
    /// initialization window onward.
    pub fitted: Vec<Observation>,
    pub state: SmoothingState,
    pub sse: f64,
}

fn min_len(params: &SmoothingParams) -> usize {
    params.seasonal_period.map(|m| 2 * m).unwrap_or(2)
}

/// Default initialization.
///
/// Non-seasonal: level is the first observation and trend the mean first
/// difference over `min(3, n-1)` steps. Seasonal with period `m`: trend is
/// the per-step change between the means of the first two cycles, level the
/// first-cycle mean carried forward to the cycle's last step, offsets the
/// first cycle minus that detrended line.
pub fn initial_state(values: &[f64], params: &SmoothingParams) -> Result<InitialState> {
    params.validate()?;
    let need = min_len(params);
    if values.len() < need {
        return Err(ForecastError::Argument(format!(
            "series too short: {} observations, need at least {need}",
            values.len()
        )));
    }
    match params.seasonal_period {
        None => {
            let k = 3.min(values.len() - 1);
            Ok(InitialState {
                level: values[0],
                trend: (values[k] - values[0]) / k as f64,
                seasonal: None,
            })
        }
        Some(m) => {
            let first = values[..m].iter().sum::<f64>() / m as f64;
            let second = values[m..2 * m].iter().sum::<f64>() / m as f64;
            let trend = (second - first) / m as f64;
            let centre = (m as f64 - 1.0) / 2.0;
            Ok(InitialState {
                level: first + trend * centre,
                trend,
                seasonal: Some(
                    values[..m]
                        .iter()
                        .enumerate()
                        .map(|(i, y)| y - (first + trend * (i as f64 - centre)))
                        .collect(),
                ),
            })
        }
    }
}

/// Run the smoothing recursions on `train` with the default initialization.
pub fn hw_fit_filter(train: &SectorSeries, params: &SmoothingParams) -> Result<FitResult> {
    let values = train.values();
    let init = initial_state(&values, params)?;
    hw_fit_filter_from(train, params, &init)
}

/// Run the smoothing recursions from an explicit starting state.
///
/// The recursion starts at observation index 1 (non-seasonal) or `m`
/// (seasonal); earlier observations are consumed by the initialization and
/// do not contribute to the SSE.
pub fn hw_fit_filter_from(train: &SectorSeries, params: &SmoothingParams, init: &InitialState) -> Result<FitResult> {
    params.validate()?;
    let obs = train.observations();
    let need = min_len(params);
    if obs.len() < need {
        return Err(ForecastError::Argument(format!(
            "series too short: {} observations, need at least {need}",
            obs.len()
        )));
    }
    let (alpha, beta) = (params.alpha, params.beta);
    let mut level = init.level;
    let mut trend = init.trend;

    let (start, mut seasonal) = match (params.seasonal_period, &init.seasonal) {
        (None, _) => (1, None),
        (Some(m), Some(s)) if s.len() == m => (m, Some(s.iter().copied().collect::<VecDeque<f64>>())),
        (Some(m), _) => {
            return Err(ForecastError::Argument(format!(
                "initial state needs {m} seasonal offsets"
            )))
        }
    };
    if !level.is_finite() || !trend.is_finite() {
        return Err(ForecastError::Numeric { year: obs[0].year });
    }

    let gamma = params.gamma.unwrap_or(0.0);
    let mut sse = 0.0;
    let mut fitted = Vec::with_capacity(obs.len() - start);
    for o in &obs[start..] {
        let y = o.value;
        let offset = match seasonal.as_mut() {
            Some(s) => s.pop_front().unwrap_or(0.0),
            None => 0.0,
        };
        let predicted = level + trend + offset;
        let err = y - predicted;
        sse += err * err;
        fitted.push(Observation::new(o.year, predicted));

        let prev_level = level;
        level = alpha * (y - offset) + (1.0 - alpha) * (prev_level + trend);
        trend = beta * (level - prev_level) + (1.0 - beta) * trend;
        if let Some(s) = seasonal.as_mut() {
            s.push_back(gamma * (y - level) + (1.0 - gamma) * offset);
        }
        if !level.is_finite() || !trend.is_finite() || !sse.is_finite() {
            return Err(ForecastError::Numeric { year: o.year });
        }
    }

    Ok(FitResult {
        fitted,
        state: SmoothingState {
            level,
            trend,
            seasonal: seasonal.map(Vec::from),
            last_year: train.last_year(),
        },
        sse,
    })
}

/// Extrapolate `horizon` years past `state.last_year`.
pub fn hw_forecast(state: &SmoothingState, horizon: usize) -> Result<Vec<Observation>> {
    if horizon < 1 {
        return Err(ForecastError::Argument("horizon must be at least 1".into()));
    }
    if !state.level.is_finite() || !state.trend.is_finite() {
        return Err(ForecastError::Numeric { year: state.last_year });
    }
    if let Some(s) = &state.seasonal {
        if s.is_empty() {
            return Err(ForecastError::Argument("empty seasonal state".into()));
        }
    }
    Ok((1..=horizon)
        .map(|h| {
            let offset = state.seasonal.as_ref().map(|s| s[(h - 1) % s.len()]).unwrap_or(0.0);
            Observation::new(
                state.last_year + h as i32,
                state.level + h as f64 * state.trend + offset,
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emissions::Sector;
    use proptest::prelude::*;

    fn series(values: &[f64]) -> SectorSeries {
        SectorSeries::from_values(Sector::Cement, 2000, values).unwrap()
    }

    /// Step table written out long-hand: each row computes prediction, level,
    /// trend from the previous row without sharing code with the filter.
    fn oracle_steps(y: &[f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let k = if y.len() - 1 < 3 { y.len() - 1 } else { 3 };
        let mut lv = vec![y[0]];
        let mut tr = vec![(y[k] - y[0]) / (k as f64)];
        let mut pred = vec![];
        for t in 1..y.len() {
            let p = lv[t - 1] + tr[t - 1];
            pred.push(p);
            let l = a * y[t] + (1.0 - a) * p;
            let bt = b * (l - lv[t - 1]) + (1.0 - b) * tr[t - 1];
            lv.push(l);
            tr.push(bt);
        }
        (pred, lv, tr)
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn constant_series_is_a_fixed_point() {
        let s = series(&[7.0; 10]);
        for &(a, b) in &[(0.0, 0.0), (0.3, 0.7), (1.0, 1.0)] {
            let fit = hw_fit_filter(&s, &SmoothingParams::holt(a, b).unwrap()).unwrap();
            assert_eq!(fit.sse, 0.0);
            assert!(fit.fitted.iter().all(|o| o.value == 7.0));
            assert_eq!(fit.state.level, 7.0);
            assert_eq!(fit.state.trend, 0.0);
        }
    }

    #[test]
    fn exact_line_with_unit_weights() {
        let y: Vec<f64> = (0..12).map(|t| 5.0 + 2.5 * t as f64).collect();
        let fit = hw_fit_filter(&series(&y), &SmoothingParams::holt(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(fit.state.trend, 2.5);
        assert!(fit.sse < 1e-20);
        for (o, want) in fit.fitted.iter().zip(&y[1..]) {
            assert_eq!(o.value, *want);
        }
    }

    #[test]
    fn matches_step_table_oracle() {
        let y = [412.0, 431.5, 420.25, 455.0, 470.125, 468.0, 490.5, 503.75];
        let (a, b) = (0.37, 0.21);
        let (pred, lv, tr) = oracle_steps(&y, a, b);
        let fit = hw_fit_filter(&series(&y), &SmoothingParams::holt(a, b).unwrap()).unwrap();
        for (o, p) in fit.fitted.iter().zip(&pred) {
            assert!(rel_close(o.value, *p, 1e-9));
        }
        assert!(rel_close(fit.state.level, *lv.last().unwrap(), 1e-9));
        assert!(rel_close(fit.state.trend, *tr.last().unwrap(), 1e-9));
        let sse: f64 = pred.iter().zip(&y[1..]).map(|(p, v)| (v - p).powi(2)).sum();
        assert!(rel_close(fit.sse, sse, 1e-9));

        let path = hw_forecast(&fit.state, 10).unwrap();
        for (h, o) in path.iter().enumerate() {
            let want = lv.last().unwrap() + (h as f64 + 1.0) * tr.last().unwrap();
            assert!(rel_close(o.value, want, 1e-9));
            assert_eq!(o.year, 2008 + h as i32);
        }
    }

    #[test]
    fn zero_beta_and_trend_is_simple_smoothing() {
        let y = [3.0, 8.0, 2.0, 9.5, 4.0, 6.0, 7.25];
        let a = 0.4;
        let init = InitialState {
            level: y[0],
            trend: 0.0,
            seasonal: None,
        };
        let fit = hw_fit_filter_from(&series(&y), &SmoothingParams::holt(a, 0.0).unwrap(), &init).unwrap();
        let mut level = y[0];
        for (t, o) in fit.fitted.iter().enumerate() {
            assert!(rel_close(o.value, level, 1e-12));
            level = a * y[t + 1] + (1.0 - a) * level;
        }
        assert!(rel_close(fit.state.level, level, 1e-12));
        assert_eq!(fit.state.trend, 0.0);
    }

    #[test]
    fn forecast_examples() {
        let flat = SmoothingState {
            level: 100.0,
            trend: 0.0,
            seasonal: None,
            last_year: 2023,
        };
        let f = hw_forecast(&flat, 10).unwrap();
        assert_eq!(f.len(), 10);
        assert!(f.iter().all(|o| o.value == 100.0));
        assert_eq!(f[0].year, 2024);

        let down = SmoothingState {
            trend: -5.0,
            ..flat.clone()
        };
        let vals: Vec<f64> = hw_forecast(&down, 3).unwrap().iter().map(|o| o.value).collect();
        assert_eq!(vals, vec![95.0, 90.0, 85.0]);

        assert!(hw_forecast(&flat, 0).is_err());
    }

    #[test]
    fn too_short_and_bad_params() {
        assert!(hw_fit_filter(&series(&[1.0]), &SmoothingParams::holt(0.5, 0.5).unwrap()).is_err());
        assert!(SmoothingParams::holt(1.2, 0.5).is_err());
        assert!(SmoothingParams::seasonal(0.5, 0.5, 0.5, 1).is_err());
        let seasonal = SmoothingParams::seasonal(0.5, 0.5, 0.5, 4).unwrap();
        assert!(hw_fit_filter(&series(&[1.0; 7]), &seasonal).is_err());
    }

    #[test]
    fn seasonal_pattern_is_reproduced() {
        let pattern = [10.0, -4.0, 2.0, -8.0];
        let y: Vec<f64> = (0..16).map(|t| 100.0 + 3.0 * t as f64 + pattern[t % 4]).collect();
        let p = SmoothingParams::seasonal(0.5, 0.5, 0.5, 4).unwrap();
        let fit = hw_fit_filter(&series(&y), &p).unwrap();
        assert!(fit.sse < 1e-18, "sse {}", fit.sse);
        let f = hw_forecast(&fit.state, 8).unwrap();
        for (h, o) in f.iter().enumerate() {
            let t = 16 + h;
            let want = 100.0 + 3.0 * t as f64 + pattern[t % 4];
            assert!((o.value - want).abs() < 1e-9, "{} vs {want}", o.value);
        }
    }

    proptest! {
        #[test]
        fn forecast_is_affine_in_horizon(level in -1e6f64..1e6, trend in -1e4f64..1e4, h in 3usize..30) {
            let st = SmoothingState { level, trend, seasonal: None, last_year: 2000 };
            let f = hw_forecast(&st, h).unwrap();
            for w in f.windows(3) {
                let second = (w[2].value - w[1].value) - (w[1].value - w[0].value);
                prop_assert!(second.abs() <= 1e-9 * (level.abs() + trend.abs() * h as f64 + 1.0));
            }
        }

        #[test]
        fn shift_equivariance(values in prop::collection::vec(0.0f64..1e5, 3..25), c in 0.0f64..1e5, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let p = SmoothingParams::holt(a, b).unwrap();
            let base = hw_fit_filter(&series(&values), &p).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
            let moved = hw_fit_filter(&series(&shifted), &p).unwrap();
            let f0 = hw_forecast(&base.state, 5).unwrap();
            let f1 = hw_forecast(&moved.state, 5).unwrap();
            for (x, y) in f0.iter().zip(&f1) {
                prop_assert!((y.value - x.value - c).abs() <= 1e-6 * (1.0 + x.value.abs() + c));
            }
        }
    }
}
