//! Free-boundary location and the predicted initial front velocity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial::BumpSpec;
use crate::model::{linf, pow_fast, Grid, ModelParams, State};

pub const DEFAULT_REL_THRESHOLD: f64 = 1e-4;

/// Sampled front positions `ρ(t)` of a radially symmetric support.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontTrace {
    pub times: Vec<f64>,
    pub rho: Vec<f64>,
    pub threshold: f64,
}

impl FrontTrace {
    pub fn new(threshold: f64) -> Self {
        Self {
            times: Vec::new(),
            rho: Vec::new(),
            threshold,
        }
    }

    /// Builds a trace from `(t, ρ)` pairs, checking the invariants.
    pub fn from_samples(times: Vec<f64>, rho: Vec<f64>, threshold: f64) -> Result<Self> {
        let mut trace = Self::new(threshold);
        if times.len() != rho.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                found: rho.len(),
            });
        }
        for (t, r) in times.into_iter().zip(rho) {
            trace.push(t, r)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, t: f64, rho: f64) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::InvalidControls(format!(
                    "front sample times must increase ({t} after {last})"
                )));
            }
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidControls(format!("front position {rho} is invalid")));
        }
        self.times.push(t);
        self.rho.push(rho);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True when `ρ` strictly decreases (`sign < 0`) or increases
    /// (`sign > 0`) over all samples with `t ≤ until`.
    pub fn strictly_monotone(&self, until: f64, sign: f64) -> bool {
        let pts: Vec<f64> = self
            .times
            .iter()
            .zip(&self.rho)
            .filter(|(t, _)| **t <= until)
            .map(|(_, r)| *r)
            .collect();
        pts.len() >= 2 && pts.windows(2).all(|w| sign * (w[1] - w[0]) > 0.0)
    }
}

/// Outermost crossing of the level `rel_threshold · ‖u‖_∞`, measured in
/// `|x − x₀|`. The crossing is located by linear interpolation of
/// `u^{m−1}` between the last cell above the level and its outward
/// neighbor. A support touching the boundary reports the boundary distance.
pub fn front_position(
    state: &State,
    grid: &Grid,
    spec: &BumpSpec,
    params: &ModelParams,
    rel_threshold: f64,
) -> Result<f64> {
    front_position_about(&state.u, grid, spec.x0, params.m, rel_threshold)
}

/// [`front_position`] for a bare field about the point `x0` (ignored on
/// radial grids).
pub fn front_position_about(u: &[f64], grid: &Grid, x0: f64, m: f64, rel_threshold: f64) -> Result<f64> {
    grid.check_len(u.len())?;
    let umax = linf(u);
    let level = rel_threshold * umax;
    if umax <= 0.0 || !u.iter().any(|x| *x > level) {
        return Err(Error::EmptySupport);
    }
    let e = m - 1.0;
    let w = |s: f64| pow_fast(s, e);
    let target = w(level);
    let n = grid.n_cells();
    let x0 = if grid.radial() { 0.0 } else { x0 };
    let mut rho: f64 = 0.0;
    for i in 0..n {
        if u[i] <= level {
            continue;
        }
        let r = grid.distance(i, x0);
        let outward_right = grid.radial() || grid.offset(i, x0) >= 0.0;
        let neighbor = if outward_right {
            (i + 1 < n).then_some(i + 1)
        } else {
            i.checked_sub(1)
        };
        let candidate = match neighbor {
            None => {
                if grid.radial() {
                    grid.half_length()
                } else if outward_right {
                    grid.half_length() - x0
                } else {
                    grid.half_length() + x0
                }
            }
            Some(j) if u[j] > level => continue,
            Some(j) => {
                let (wi, wj) = (w(u[i]), w(u[j]));
                let frac = ((wi - target) / (wi - wj)).clamp(0.0, 1.0);
                r + frac * grid.dx()
            }
        };
        rho = rho.max(candidate);
    }
    Ok(rho)
}

/// Band of normalized pressure `(u/‖u‖_∞)^{m−1}` used by
/// [`pressure_front_about`].
pub const DEFAULT_PRESSURE_BAND: (f64, f64) = (0.05, 0.25);

/// Front located as the zero of the least-squares line through `u^{m−1}`
/// on the outer flank of the support, using the cells whose normalized
/// pressure lies in `band`. The smeared foot below the band is ignored.
/// A flank with fewer than two cells in the band falls back to
/// [`front_position_about`] at [`DEFAULT_REL_THRESHOLD`].
pub fn pressure_front_about(u: &[f64], grid: &Grid, x0: f64, m: f64, band: (f64, f64)) -> Result<f64> {
    grid.check_len(u.len())?;
    if !(band.0 > 0.0 && band.0 < band.1 && band.1 <= 1.0) {
        return Err(Error::InvalidParams(format!("pressure band {band:?} must satisfy 0 < lo < hi <= 1")));
    }
    let umax = linf(u);
    if umax <= 0.0 {
        return Err(Error::EmptySupport);
    }
    let e = m - 1.0;
    let wmax = pow_fast(umax, e);
    let (lo, hi) = (band.0 * wmax, band.1 * wmax);
    let n = grid.n_cells();
    let x0 = if grid.radial() { 0.0 } else { x0 };
    let xs = grid.centers();
    let w: Vec<f64> = u.iter().map(|s| pow_fast(*s, e)).collect();
    let mut flanks: Vec<(Vec<usize>, f64)> = Vec::with_capacity(2);
    // Right flank: walk inward from the outermost cell at or above `lo`.
    if let Some(last) = (0..n).rev().find(|&i| w[i] >= lo) {
        let cells: Vec<usize> = (0..=last).rev().take_while(|&i| w[i] <= hi).collect();
        flanks.push((cells, (last == n - 1) as u8 as f64));
    }
    if !grid.radial() {
        if let Some(first) = (0..n).find(|&i| w[i] >= lo) {
            let cells: Vec<usize> = (first..n).take_while(|&i| w[i] <= hi).collect();
            flanks.push((cells, (first == 0) as u8 as f64));
        }
    }
    let mut rho: f64 = 0.0;
    let mut fallback = false;
    for (side, (cells, at_boundary)) in flanks.into_iter().enumerate() {
        let outward = if side == 0 { 1.0 } else { -1.0 };
        if at_boundary > 0.0 {
            rho = rho.max(grid.half_length() - outward * x0);
            continue;
        }
        if cells.len() < 2 {
            fallback = true;
            continue;
        }
        let k = cells.len() as f64;
        let mx = cells.iter().map(|&i| xs[i]).sum::<f64>() / k;
        let mw = cells.iter().map(|&i| w[i]).sum::<f64>() / k;
        let sxw: f64 = cells.iter().map(|&i| (xs[i] - mx) * (w[i] - mw)).sum();
        let sxx: f64 = cells.iter().map(|&i| (xs[i] - mx) * (xs[i] - mx)).sum();
        let slope = sxw / sxx;
        if !(outward * slope < 0.0) {
            fallback = true;
            continue;
        }
        let zero = mx - mw / slope;
        rho = rho.max(outward * (zero - x0));
    }
    if fallback {
        rho = rho.max(front_position_about(u, grid, x0, m, DEFAULT_REL_THRESHOLD)?);
    }
    Ok(rho)
}

/// `R₀(2m/(m−1) K₀^{m−1} − χμ)`, defined for the canonical exponent only.
pub fn predicted_speed(params: &ModelParams, spec: &BumpSpec) -> Result<f64> {
    let d = params.d();
    if (spec.d0 - d).abs() > 1e-12 * d {
        return Err(Error::Hypothesis(format!(
            "the front speed formula needs d0 = 1/(m-1) = {d}, got {}",
            spec.d0
        )));
    }
    let m = params.m;
    Ok(spec.r0 * (2.0 * m / (m - 1.0) * spec.k0.powf(m - 1.0) - params.chi * spec.mu))
}
