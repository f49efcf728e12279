//! Holt-Winters exponential smoothing, parameter estimation and backtests.
//!
//! The default model is additive-trend Holt smoothing (no seasonal term),
//! which is what Holt-Winters reduces to on annual data. An additive seasonal
//! component is available by setting `seasonal_period`.

mod backtest;
mod holt;
mod metrics;
mod optimize;

pub use backtest::{backtest, backtest_all, forecast_series, BacktestReport, ForecastRun, YearError};
pub use holt::{hw_fit_filter, hw_fit_filter_from, hw_forecast, initial_state, FitResult, InitialState};
pub use metrics::{error_rate, error_stddev};
pub use optimize::{fit_params, FitConfig, FittedModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emissions::EmissionsError;

#[derive(Debug, Error, PartialEq)]
pub enum ForecastError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("non-finite value in smoothing recursion at {year}")]
    Numeric { year: i32 },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error(transparent)]
    Emissions(#[from] EmissionsError),
}

pub type Result<T> = std::result::Result<T, ForecastError>;

/// Smoothing weights. `gamma` and `seasonal_period` are both set or both absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seasonal_period: Option<usize>,
}

fn check_weight(name: &str, w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(ForecastError::Argument(format!("{name} must lie in [0, 1], got {w}")));
    }
    Ok(())
}

impl SmoothingParams {
    /// Holt's linear method (no seasonal term).
    pub fn holt(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma: None,
            seasonal_period: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Additive Holt-Winters with a seasonal cycle of `period` steps.
    pub fn seasonal(alpha: f64, beta: f64, gamma: f64, period: usize) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma: Some(gamma),
            seasonal_period: Some(period),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_weight("alpha", self.alpha)?;
        check_weight("beta", self.beta)?;
        match (self.gamma, self.seasonal_period) {
            (None, None) => Ok(()),
            (Some(g), Some(m)) => {
                check_weight("gamma", g)?;
                if m < 2 {
                    return Err(ForecastError::Argument(format!(
                        "seasonal period must be at least 2, got {m}"
                    )));
                }
                Ok(())
            }
            _ => Err(ForecastError::Argument(
                "gamma and seasonal_period must be given together".into(),
            )),
        }
    }
}

/// Smoothing state after the last observation.
///
/// `seasonal[j]` is the additive offset that applies to `last_year + 1 + j`
/// (cycling with the period).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingState {
    pub level: f64,
    pub trend: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seasonal: Option<Vec<f64>>,
    pub last_year: i32,
}
