//! Closed-form bubble, its translates and the kernels of the linearization.

use std::sync::Arc;

use serde::Serialize;

use crate::{Error, Field, FsParameters, Grid, Result};

/// Amplitude and center of one bubble `alpha Psi(t - s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BubbleSpec {
    pub alpha: f64,
    pub center: f64,
}

impl BubbleSpec {
    pub fn new(alpha: f64, center: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidParameter(format!("bubble needs alpha > 0, got ({alpha}, {center})")));
        }
        Ok(Self { alpha, center })
    }

    pub fn unit(center: f64) -> Self {
        Self { alpha: 1.0, center }
    }
}

/// Amplitude `Psi(0)`.
pub fn psi_peak(params: &FsParameters) -> f64 {
    let p = params.p;
    ((p + 1.0) * params.lambda_fs / 2.0).powf(1.0 / (p - 1.0))
}

fn log_cosh(z: f64) -> f64 {
    let z = z.abs();
    z + (-2.0 * z).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln Psi(t)`, finite for every `t`.
pub fn log_psi(params: &FsParameters, t: f64) -> f64 {
    let p = params.p;
    let k = params.sqrt_lambda() * (p - 1.0) / 2.0;
    psi_peak(params).ln() - 2.0 / (p - 1.0) * log_cosh(k * t)
}

pub fn psi(params: &FsParameters, t: f64) -> f64 {
    log_psi(params, t).exp()
}

pub fn dpsi(params: &FsParameters, t: f64) -> f64 {
    let p = params.p;
    let k = params.sqrt_lambda() * (p - 1.0) / 2.0;
    -2.0 / (p - 1.0) * k * (k * t).tanh() * psi(params, t)
}

/// `Psi''`, read off the profile equation.
pub fn d2psi(params: &FsParameters, t: f64) -> f64 {
    let v = psi(params, t);
    params.lambda_fs * v - v.powf(params.p)
}

/// Radial factor `Psi^{(p+1)/2}` of the nontrivial kernel.
pub fn kernel_radial(params: &FsParameters, t: f64) -> f64 {
    ((params.p + 1.0) / 2.0 * log_psi(params, t)).exp()
}

fn warn_tail(grid: &Grid, s: f64) {
    let params = grid.params();
    let tail = psi(params, grid.t_min() - s).max(psi(params, grid.t_max() - s));
    if tail > 1e-10 * psi_peak(params) {
        log::warn!("bubble at s = {s} is not resolved by the grid: boundary value {tail:.3e}");
    }
}

/// `Psi_s` as a mode-0 field.
pub fn psi_profile(grid: &Arc<Grid>, s: f64) -> Field {
    warn_tail(grid, s);
    let params = *grid.params();
    Field::single_mode(grid, 0, grid.sample(|t| psi(&params, t - s)))
}

/// `d/dt Psi_s` as a mode-0 field.
pub fn dpsi_profile(grid: &Arc<Grid>, s: f64) -> Field {
    let params = *grid.params();
    Field::single_mode(grid, 0, grid.sample(|t| dpsi(&params, t - s)))
}

/// `w_{s,l} = Psi_s^{(p+1)/2} theta_l`. Only the axial direction `l = d`
/// is representable in an axisymmetric field.
pub fn kernel_profile(grid: &Arc<Grid>, s: f64, l: usize) -> Result<Field> {
    if l != grid.d() {
        return Err(Error::InvalidParameter(format!(
            "only the axial kernel l = d = {} is axisymmetric, got l = {l}",
            grid.d()
        )));
    }
    if grid.max_mode() < 1 {
        return Err(Error::InvalidParameter("kernel needs max_mode >= 1".into()));
    }
    let params = *grid.params();
    Ok(Field::single_mode(grid, 1, grid.sample(|t| kernel_radial(&params, t - s))))
}

/// `sum_j alpha_j Psi_{s_j}` as a mode-0 field.
pub fn bubble_sum(grid: &Arc<Grid>, specs: &[BubbleSpec]) -> Result<Field> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("bubble_sum needs at least one bubble".into()));
    }
    let params = *grid.params();
    for s in specs {
        warn_tail(grid, s.center);
    }
    let prof = grid.sample(|t| specs.iter().map(|b| b.alpha * psi(&params, t - b.center)).sum());
    Ok(Field::single_mode(grid, 0, prof))
}

/// Euclidean bubble `W(|x|)`.
pub fn euclidean_w(params: &FsParameters, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let p = params.p;
    let g = params.sqrt_lambda();
    let lead = (2.0 * (p + 1.0) * params.lambda_fs).powf(1.0 / (p - 1.0));
    // (1 + r^m)^{-2/(p-1)} in log form; r^m overflows for large r.
    let lm = g * (p - 1.0) * r.ln();
    let log1p_rm = if lm > 0.0 { lm + (-lm).exp().ln_1p() } else { lm.exp().ln_1p() };
    Ok(lead * (-2.0 / (p - 1.0) * log1p_rm).exp())
}

/// `|x|^{-(a_c - a)} Psi(-ln|x|)`, the cylinder image of `W`.
pub fn transformed_psi(params: &FsParameters, r: f64) -> f64 {
    (-params.sqrt_lambda() * r.ln() + log_psi(params, -r.ln())).exp()
}
