//! Scalar observables of a run and the convergence-to-equilibrium study.

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{integrate, Field};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("threshold {threshold:e} not reached before t = {t_last}")]
    TargetNotReached {
        threshold: f64,
        t_last: f64,
        series: Box<ConvergenceSeries>,
    },
    #[error("rate fit needs at least {MIN_FIT_SAMPLES} positive samples in the window, got {got}")]
    InsufficientData { got: usize },
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Midrange `(max v + min v) / 2`. This is the convergence observable; for the
/// spatial average see [`spatial_average`].
pub fn mean_value(v: &Field) -> f64 {
    0.5 * (v.max() + v.min())
}

pub fn spatial_average(v: &Field) -> f64 {
    integrate(v) / v.grid().domain_area()
}

/// Per-step observables of a `(u, v)` state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub v_mid: f64,
}

impl DiagnosticsRecord {
    pub fn of(t: f64, u: &Field, v: &Field) -> Self {
        DiagnosticsRecord {
            t,
            mass: integrate(u) + integrate(v),
            u_min: u.min(),
            u_max: u.max(),
            v_min: v.min(),
            v_max: v.max(),
            v_mid: mean_value(v),
        }
    }

    /// `(|v1 - max v|, |v1 - min v|, |v1 - v_m|)`.
    pub fn errors_to(&self, v1: f64) -> (f64, f64, f64) {
        (
            (v1 - self.v_max).abs(),
            (v1 - self.v_min).abs(),
            (v1 - self.v_mid).abs(),
        )
    }
}

/// Diagnostics time series as CSV. Error columns are included when a target
/// is given.
pub fn series_to_csv(records: &[DiagnosticsRecord], v_target: Option<f64>) -> String {
    let mut out = String::from("t,mass,u_min,u_max,v_min,v_max,v_m");
    if v_target.is_some() {
        out.push_str(",err_max,err_min,err_mean");
    }
    out.push('\n');
    for r in records {
        write!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.mass, r.u_min, r.u_max, r.v_min, r.v_max, r.v_mid
        )
        .unwrap();
        if let Some(v1) = v_target {
            let (a, b, c) = r.errors_to(v1);
            write!(out, ",{a:.16e},{b:.16e},{c:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub times: Vec<f64>,
    pub err_max: Vec<f64>,
    pub err_min: Vec<f64>,
    pub err_mean: Vec<f64>,
    /// First time at which all three errors are below the threshold.
    pub stop_time: Option<f64>,
}

impl ConvergenceSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,err_max,err_min,err_mean\n");
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.err_max[i], self.err_min[i], self.err_mean[i]
            )
            .unwrap();
        }
        out
    }

    /// Default post-transient window `[0.2 t_stop, t_stop]`.
    pub fn default_window(&self) -> Option<(f64, f64)> {
        self.stop_time.map(|t| (0.2 * t, t))
    }
}

pub fn convergence_study(
    records: &[DiagnosticsRecord],
    v1: f64,
    threshold: f64,
) -> Result<ConvergenceSeries, DiagnosticsError> {
    let mut series = ConvergenceSeries {
        times: Vec::with_capacity(records.len()),
        err_max: Vec::with_capacity(records.len()),
        err_min: Vec::with_capacity(records.len()),
        err_mean: Vec::with_capacity(records.len()),
        stop_time: None,
    };
    for r in records {
        let (a, b, c) = r.errors_to(v1);
        series.times.push(r.t);
        series.err_max.push(a);
        series.err_min.push(b);
        series.err_mean.push(c);
        if series.stop_time.is_none() && a.max(b).max(c) < threshold {
            series.stop_time = Some(r.t);
        }
    }
    if series.stop_time.is_none() {
        let t_last = records.last().map_or(0.0, |r| r.t);
        return Err(DiagnosticsError::TargetNotReached {
            threshold,
            t_last,
            series: Box::new(series),
        });
    }
    Ok(series)
}

/// Least-squares fit `log(err) ~ intercept + slope t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard deviation of the log-residuals.
    pub residual_std: f64,
    pub samples: usize,
}

/// Fits an exponential rate to the samples of `errors` with `t` in `window`.
/// Non-positive samples are dropped.
pub fn exponential_rate_fit(
    times: &[f64],
    errors: &[f64],
    window: (f64, f64),
) -> Result<RateFit, DiagnosticsError> {
    let (ta, tb) = window;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(errors)
        .filter(|(&t, &e)| t >= ta && t <= tb && e > 0.0 && e.is_finite())
        .map(|(&t, &e)| (t, e.ln()))
        .collect();
    let n = pts.len();
    if n < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::InsufficientData { got: n });
    }
    let nf = n as f64;
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut stt, mut sty) = (0.0, 0.0);
    for &(t, y) in &pts {
        stt += (t - t_mean) * (t - t_mean);
        sty += (t - t_mean) * (y - y_mean);
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let ss_res: f64 = pts
        .iter()
        .map(|&(t, y)| (y - intercept - slope * t).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        residual_std: (ss_res / nf).sqrt(),
        samples: n,
    })
}
