use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::holt::hw_forecast;
use super::metrics::{error_rate, error_stddev};
use super::optimize::{fit_params, FitConfig};
use super::{ForecastError, Result, SmoothingParams, SmoothingState};
use crate::emissions::{split_train_test, EmissionsDataset, Observation, Sector, SectorSeries};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearError {
    pub year: i32,
    pub actual: f64,
    pub predicted: f64,
    /// actual − predicted
    pub error: f64,
}

/// Holdout evaluation of one sector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub sector: Sector,
    pub holdout: usize,
    pub train_years: (i32, i32),
    pub params: SmoothingParams,
    pub sse: f64,
    pub error_rate: f64,
    pub error_stddev_abs: f64,
    /// `error_stddev_abs` divided by the mean of the holdout actuals.
    pub error_stddev_relative: f64,
    pub per_year_errors: Vec<YearError>,
    pub warnings: Vec<String>,
}

impl BacktestReport {
    /// `year,actual,predicted` rows for the holdout window.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,actual,predicted\n");
        for e in &self.per_year_errors {
            out.push_str(&format!("{},{},{}\n", e.year, e.actual, e.predicted));
        }
        out
    }
}

fn negative_warnings(points: &[Observation]) -> Vec<String> {
    points
        .iter()
        .filter(|o| o.value < 0.0)
        .map(|o| format!("negative forecast {} in {}", o.value, o.year))
        .collect()
}

/// Fit on all but the last `holdout` years, forecast those years and score
/// the forecast.
pub fn backtest(series: &SectorSeries, holdout: usize, config: &FitConfig) -> Result<BacktestReport> {
    if series.len() <= holdout + 2 {
        return Err(ForecastError::Argument(format!(
            "backtest of {} observations with holdout {holdout} needs more than {} observations",
            series.len(),
            holdout + 2
        )));
    }
    let (train, test) = split_train_test(series, holdout)?;
    let model = fit_params(&train, config)?;
    let predicted = hw_forecast(&model.state, holdout)?;

    let actual: Vec<f64> = test.values();
    let pred: Vec<f64> = predicted.iter().map(|o| o.value).collect();
    let rate = error_rate(&actual, &pred)?;
    let stddev = error_stddev(&actual, &pred)?;
    let mean_actual = actual.iter().sum::<f64>() / actual.len() as f64;

    let per_year_errors = test
        .observations()
        .iter()
        .zip(&predicted)
        .map(|(a, p)| YearError {
            year: a.year,
            actual: a.value,
            predicted: p.value,
            error: a.value - p.value,
        })
        .collect();

    Ok(BacktestReport {
        sector: series.sector().clone(),
        holdout,
        train_years: (train.first_year(), train.last_year()),
        params: model.params,
        sse: model.sse,
        error_rate: rate,
        error_stddev_abs: stddev,
        error_stddev_relative: stddev / mean_actual,
        per_year_errors,
        warnings: negative_warnings(&predicted),
    })
}

/// Backtest every sector of a dataset in parallel. Results are keyed by
/// sector so the outcome does not depend on scheduling.
pub fn backtest_all(
    dataset: &EmissionsDataset,
    holdout: usize,
    config: &FitConfig,
) -> BTreeMap<Sector, Result<BacktestReport>> {
    dataset
        .series
        .par_iter()
        .map(|(sector, series)| (sector.clone(), backtest(series, holdout, config)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Model fitted on a whole series plus its forward forecast.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastRun {
    pub sector: Sector,
    pub params: SmoothingParams,
    pub sse: f64,
    pub state: SmoothingState,
    pub history: Vec<Observation>,
    pub fitted: Vec<Observation>,
    pub forecast: Vec<Observation>,
    pub warnings: Vec<String>,
}

impl ForecastRun {
    /// `year,actual,predicted`; history rows carry the one-step fit (blank
    /// for the initialization year), forecast rows a blank actual.
    pub fn to_csv(&self) -> String {
        let fitted: BTreeMap<i32, f64> = self.fitted.iter().map(|o| (o.year, o.value)).collect();
        let mut out = String::from("year,actual,predicted\n");
        for o in &self.history {
            match fitted.get(&o.year) {
                Some(p) => out.push_str(&format!("{},{},{}\n", o.year, o.value, p)),
                None => out.push_str(&format!("{},{},\n", o.year, o.value)),
            }
        }
        for o in &self.forecast {
            out.push_str(&format!("{},,{}\n", o.year, o.value));
        }
        out
    }
}

pub fn forecast_series(series: &SectorSeries, horizon: usize, config: &FitConfig) -> Result<ForecastRun> {
    let model = fit_params(series, config)?;
    let forecast = hw_forecast(&model.state, horizon)?;
    Ok(ForecastRun {
        sector: series.sector().clone(),
        params: model.params,
        sse: model.sse,
        warnings: negative_warnings(&forecast),
        state: model.state,
        history: series.observations().to_vec(),
        fitted: model.fitted,
        forecast,
    })
}
