//! Smoothing-weight estimation: uniform grid search followed by a bounded
//! Nelder-Mead refinement from the best grid point.

use serde::{Deserialize, Serialize};

use super::holt::{hw_fit_filter, FitResult};
use super::{ForecastError, Result, SmoothingParams, SmoothingState};
use crate::emissions::{Observation, SectorSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Points per axis of the uniform weight grid over [0, 1].
    pub grid_steps: usize,
    /// Run the local refinement after the grid search.
    pub refine: bool,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Enables the additive seasonal term.
    pub seasonal_period: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            grid_steps: 21,
            refine: true,
            max_iterations: 500,
            tolerance: 1e-12,
            seasonal_period: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModel {
    pub params: SmoothingParams,
    pub state: SmoothingState,
    pub sse: f64,
    pub fitted: Vec<Observation>,
}

fn params_from(x: &[f64], period: Option<usize>) -> SmoothingParams {
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    SmoothingParams {
        alpha: clamp(x[0]),
        beta: clamp(x[1]),
        gamma: period.map(|_| clamp(x[2])),
        seasonal_period: period,
    }
}

/// Estimate weights minimizing the one-step-ahead SSE on `train`.
///
/// Grid ties resolve to the smaller alpha, then the smaller beta (then gamma).
/// The refined point replaces the grid optimum only when strictly better, so
/// the returned SSE never exceeds the best grid SSE.
pub fn fit_params(train: &SectorSeries, config: &FitConfig) -> Result<FittedModel> {
    if config.grid_steps < 2 {
        return Err(ForecastError::Argument("grid_steps must be at least 2".into()));
    }
    let period = config.seasonal_period;
    let dims = if period.is_some() { 3 } else { 2 };
    let steps = config.grid_steps;
    let axis: Vec<f64> = (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect();

    let evaluate = |x: &[f64]| -> Result<FitResult> { hw_fit_filter(train, &params_from(x, period)) };

    let mut best: Option<(Vec<f64>, FitResult)> = None;
    let gamma_axis: &[f64] = if dims == 3 { &axis } else { &[0.0] };
    for &a in &axis {
        for &b in &axis {
            for &g in gamma_axis {
                let x = vec![a, b, g];
                let fit = evaluate(&x)?;
                if best.as_ref().is_none_or(|(_, bf)| fit.sse < bf.sse) {
                    best = Some((x, fit));
                }
            }
        }
    }
    let (mut best_x, mut best_fit) = best.expect("grid is nonempty");
    best_x.truncate(dims);

    if config.refine && best_fit.sse > 0.0 {
        let objective = |x: &[f64]| match evaluate(x) {
            Ok(f) => f.sse,
            Err(_) => f64::INFINITY,
        };
        let (x, f) = nelder_mead(objective, &best_x, config.max_iterations, config.tolerance);
        if f < best_fit.sse {
            let fit = evaluate(&x)?;
            if fit.sse < best_fit.sse {
                best_x = x;
                best_fit = fit;
            }
        }
    }

    let mut x = best_x;
    x.resize(3, 0.0);
    Ok(FittedModel {
        params: params_from(&x, period),
        state: best_fit.state,
        sse: best_fit.sse,
        fitted: best_fit.fitted,
    })
}

/// Nelder-Mead on the unit box; points are projected onto [0, 1]^n.
fn nelder_mead<F>(f: F, start: &[f64], max_iter: usize, tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let project = |x: Vec<f64>| -> Vec<f64> { x.into_iter().map(|v| v.clamp(0.0, 1.0)).collect() };
    let step = 0.05;

    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] = if p[i] + step <= 1.0 { p[i] + step } else { p[i] - step };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= tol * values[0].abs().max(1.0)) || size < 1e-12 {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            project(
                centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(c, w)| c + coef * (c - w))
                    .collect(),
            )
        };

        let reflected = along(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let contracted = if fr < values[n] { along(0.5) } else { along(-0.5) };
            let fc = f(&contracted);
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(p, b)| b + 0.5 * (p - b))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    (simplex[best].clone(), values[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emissions::Sector;
    use crate::forecast::SmoothingParams;
    use rand::{Rng, SeedableRng};

    fn series(values: &[f64]) -> SectorSeries {
        SectorSeries::from_values(Sector::Gas, 1990, values).unwrap()
    }

    /// Independent grid oracle over (alpha, beta) with its own recursion.
    fn grid_min_sse(y: &[f64], steps: usize) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..steps {
            for j in 0..steps {
                let a = i as f64 / (steps - 1) as f64;
                let b = j as f64 / (steps - 1) as f64;
                let k = 3.min(y.len() - 1);
                let (mut l, mut t) = (y[0], (y[k] - y[0]) / k as f64);
                let mut sse = 0.0;
                for &v in &y[1..] {
                    let p = l + t;
                    sse += (v - p) * (v - p);
                    let nl = a * v + (1.0 - a) * p;
                    t = b * (nl - l) + (1.0 - b) * t;
                    l = nl;
                }
                best = best.min(sse);
            }
        }
        best
    }

    #[test]
    fn exact_line_reaches_zero() {
        let y: Vec<f64> = (0..15).map(|t| 100.0 + 7.0 * t as f64).collect();
        let m = fit_params(&series(&y), &FitConfig::default()).unwrap();
        let unit = hw_fit_filter(&series(&y), &SmoothingParams::holt(1.0, 1.0).unwrap()).unwrap();
        assert!(m.sse <= unit.sse);
        assert!(m.sse < 1e-18);
    }

    #[test]
    fn constant_series_ties_break_to_smallest_weights() {
        let m = fit_params(&series(&[42.0; 12]), &FitConfig::default()).unwrap();
        assert_eq!(m.sse, 0.0);
        assert_eq!((m.params.alpha, m.params.beta), (0.0, 0.0));
    }

    #[test]
    fn deterministic() {
        let y = [5.0, 7.5, 6.0, 9.0, 12.0, 11.0, 14.5, 13.0, 18.0];
        let a = fit_params(&series(&y), &FitConfig::default()).unwrap();
        let b = fit_params(&series(&y), &FitConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn never_worse_than_grid_oracle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(6..30);
            let slope: f64 = rng.random_range(-5.0..5.0);
            let y: Vec<f64> = (0..n)
                .map(|t| 200.0 + slope * t as f64 + rng.random_range(-10.0..10.0))
                .collect();
            let m = fit_params(&series(&y), &FitConfig::default()).unwrap();
            let oracle = grid_min_sse(&y, 21);
            assert!(m.sse <= oracle, "{} > {}", m.sse, oracle);
        }
    }

    #[test]
    fn seasonal_fit_runs() {
        let pattern = [4.0, -1.0, -3.0];
        let y: Vec<f64> = (0..15).map(|t| 50.0 + t as f64 + pattern[t % 3]).collect();
        let cfg = FitConfig {
            seasonal_period: Some(3),
            grid_steps: 6,
            ..FitConfig::default()
        };
        let m = fit_params(&series(&y), &cfg).unwrap();
        assert_eq!(m.params.seasonal_period, Some(3));
        assert!(m.params.gamma.is_some());
        assert!(m.sse < 1e-12);
    }

    #[test]
    fn rejects_degenerate_grid() {
        let cfg = FitConfig {
            grid_steps: 1,
            ..FitConfig::default()
        };
        assert!(fit_params(&series(&[1.0, 2.0, 3.0]), &cfg).is_err());
    }

    #[test]
    fn nelder_mead_finds_box_minimum() {
        let (x, fx) = nelder_mead(|p| (p[0] - 0.3).powi(2) + (p[1] - 0.8).powi(2), &[0.5, 0.5], 500, 1e-16);
        assert!((x[0] - 0.3).abs() < 1e-5 && (x[1] - 0.8).abs() < 1e-5, "{x:?}");
        assert!(fx < 1e-9);
    }
}
