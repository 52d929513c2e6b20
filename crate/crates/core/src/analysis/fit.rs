//! Speed extrapolation, exponential decay fits and decay metrics.

use serde::{Deserialize, Serialize};

use crate::analysis::front::FrontTrace;
use crate::error::{Error, Result};
use crate::model::{grad_max, linf, Grid, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub speed: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub n_windows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Prefactor `C` of `C e^{−ct}`.
    pub prefactor: f64,
    /// Rate `c`.
    pub rate: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_samples: usize,
    pub ubar: f64,
}

impl DecayFit {
    pub fn with_ubar(self, ubar: f64) -> Self {
        Self { ubar, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayMetrics {
    pub u_dev: f64,
    pub v_linf: f64,
    pub grad_v: f64,
    pub min_u: f64,
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, ss_res, sxx)`.
fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - xm) * (a - xm)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = ym - b * xm;
    let ss_res = x
        .iter()
        .zip(y)
        .map(|(a_, b_)| {
            let r = b_ - (a + b * a_);
            r * r
        })
        .sum();
    (a, b, ss_res, sxx)
}

/// [`initial_speed_with`] using four sub-windows.
pub fn initial_speed(front: &FrontTrace, fit_horizon: f64) -> Result<SpeedFit> {
    initial_speed_with(front, fit_horizon, 4)
}

/// Splits the samples in `[t_first, t_first + fit_horizon]` into contiguous
/// sub-windows, fits a slope in each, regresses the slopes against the
/// window mean time and extrapolates to the first sample time.
pub fn initial_speed_with(front: &FrontTrace, fit_horizon: f64, windows: usize) -> Result<SpeedFit> {
    let t_first = *front.times.first().ok_or(Error::TooFewSamples { needed: 5, got: 0 })?;
    let limit = t_first + fit_horizon * (1.0 + 1e-12);
    let idx: Vec<usize> = (0..front.len()).filter(|&i| front.times[i] <= limit).collect();
    if idx.len() < 5 {
        return Err(Error::TooFewSamples {
            needed: 5,
            got: idx.len(),
        });
    }
    let k = windows.clamp(1, idx.len() / 2);
    let mut mids = Vec::with_capacity(k);
    let mut slopes = Vec::with_capacity(k);
    for w in 0..k {
        let lo = w * idx.len() / k;
        let hi = (w + 1) * idx.len() / k;
        let t: Vec<f64> = idx[lo..hi].iter().map(|&i| front.times[i] - t_first).collect();
        let r: Vec<f64> = idx[lo..hi].iter().map(|&i| front.rho[i]).collect();
        let (_, b, _, _) = least_squares(&t, &r);
        mids.push(t.iter().sum::<f64>() / t.len() as f64);
        slopes.push(b);
    }
    let (speed, stderr) = if k == 1 {
        (slopes[0], 0.0)
    } else {
        let (a, _, ss_res, sxx) = least_squares(&mids, &slopes);
        let kf = k as f64;
        let stderr = if k > 2 && sxx > 0.0 {
            let mean = mids.iter().sum::<f64>() / kf;
            (ss_res / (kf - 2.0) * (1.0 / kf + mean * mean / sxx)).sqrt()
        } else {
            0.0
        };
        (a, stderr)
    };
    Ok(SpeedFit {
        speed,
        stderr,
        n_samples: idx.len(),
        n_windows: k,
    })
}

/// Least-squares fit of `log y = log C − c t` over samples with `t` in the
/// closed window.
pub fn fit_exponential(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    let mut t = Vec::new();
    let mut ly = Vec::new();
    for (&ti, &yi) in times.iter().zip(values) {
        if ti < window.0 || ti > window.1 {
            continue;
        }
        if !(yi > 0.0 && yi.is_finite()) {
            return Err(Error::NonPositiveSample { t: ti, value: yi });
        }
        t.push(ti);
        ly.push(yi.ln());
    }
    if t.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: t.len(),
        });
    }
    let (a, b, ss_res, _) = least_squares(&t, &ly);
    let mean = ly.iter().sum::<f64>() / ly.len() as f64;
    let ss_tot: f64 = ly.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r_squared = if ss_tot <= 1e-28 * ly.len() as f64 * (1.0 + mean * mean) {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        prefactor: a.exp(),
        rate: -b,
        r_squared,
        window,
        n_samples: t.len(),
        ubar: 0.0,
    })
}

/// `‖u − ū‖_∞`, `‖v‖_∞`, `‖∇v‖_∞` and `min u` of a state.
pub fn decay_metrics(state: &State, grid: &Grid, ubar: f64) -> Result<DecayMetrics> {
    grid.check_len(state.u.len())?;
    Ok(DecayMetrics {
        u_dev: state.u.iter().fold(0.0, |a, x| a.max((x - ubar).abs())),
        v_linf: linf(&state.v),
        grad_v: grad_max(&state.v, grid)?,
        min_u: state.u.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Largest discrete Hölder quotient `|f_i − f_j| / |x_i − x_j|^γ` over
/// index strides `1, 2, 4, …`.
pub fn holder_quotient(field: &[f64], grid: &Grid, exponent: f64) -> Result<f64> {
    grid.check_len(field.len())?;
    let n = field.len();
    let mut worst: f64 = 0.0;
    let mut stride = 1;
    while stride < n {
        let denom = (stride as f64 * grid.dx()).powf(exponent);
        for i in 0..n - stride {
            worst = worst.max((field[i + stride] - field[i]).abs() / denom);
        }
        stride *= 2;
    }
    Ok(worst)
}
