//! Inner products, norms, the residual, the dual norm and the deficit.
//!
//! The norm is the `Lambda_FS`-weighted one,
//! `|u|^2 = int |d_t u|^2 + |grad_theta u|^2 + Lambda_FS u^2`.

use std::sync::Arc;

use serde::Serialize;

use crate::bubbles;
use crate::cylinder::{pointwise_power, to_nodal};
use crate::exec;
use crate::{Error, Field, Grid, Result};

/// `(-d_t^2 - Delta_theta + Lambda_FS) u`, mode by mode.
pub fn apply_a(u: &Field) -> Field {
    let g = u.grid();
    let modes = exec::map_range(g.n_modes(), |j| g.apply_stiffness(j, u.mode(j)));
    Field::from_modes(g, modes).expect("shape preserved")
}

pub fn l2_inner(u: &Field, v: &Field) -> Result<f64> {
    u.check_grid(v)?;
    Ok(l2_unchecked(u, v))
}

pub(crate) fn l2_unchecked(u: &Field, v: &Field) -> f64 {
    let g = u.grid();
    (0..g.n_modes()).map(|j| g.mode_l2(j, u.mode(j), v.mode(j))).sum()
}

pub fn h1_inner(u: &Field, v: &Field) -> Result<f64> {
    u.check_grid(v)?;
    Ok(h1_unchecked(u, v))
}

pub(crate) fn h1_unchecked(u: &Field, v: &Field) -> f64 {
    let g = u.grid();
    let parts = exec::map_range(g.n_modes(), |j| {
        if u.mode(j).iter().all(|x| *x == 0.0) || v.mode(j).iter().all(|x| *x == 0.0) {
            0.0
        } else {
            g.mode_h1(j, u.mode(j), v.mode(j))
        }
    });
    parts.into_iter().sum()
}

pub fn norm(u: &Field) -> f64 {
    h1_unchecked(u, u).max(0.0).sqrt()
}

pub fn l2_norm(u: &Field) -> f64 {
    l2_unchecked(u, u).max(0.0).sqrt()
}

/// `(int |u|^q)^{1/q}` by nodal quadrature.
pub fn lp_norm(u: &Field, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("lp_norm needs q >= 1, got {q}")));
    }
    let s = to_nodal(u).integrate(u.grid(), |v| v.abs().powf(q));
    Ok(s.powf(1.0 / q))
}

/// `f = (-d_t^2 - Delta_theta + Lambda_FS) v - |v|^{p-1} v`, with the
/// nonlinear part evaluated nodally and projected.
pub fn residual(v: &Field) -> Field {
    let p = v.grid().params().p;
    let mut f = apply_a(v);
    f.axpy(-1.0, &pointwise_power(v, p, true).field);
    f
}

/// Residual of `v` when `v - known` is small and the continuum image
/// `known_image = (-d_t^2 - Delta_theta + Lambda_FS) known` is available in
/// closed form. Only `v - known` goes through the difference operator, so
/// the discretization error of `known` does not enter `f`.
pub fn residual_split(v: &Field, known: &Field, known_image: &Field) -> Result<Field> {
    v.check_grid(known)?;
    v.check_grid(known_image)?;
    let p = v.grid().params().p;
    let mut f = apply_a(&(v - known));
    f.axpy(1.0, known_image);
    f.axpy(-1.0, &pointwise_power(v, p, true).field);
    Ok(f)
}

/// The `H^{-1}` norm of `f` and its Riesz representative.
#[derive(Clone, Debug)]
pub struct DualNormResult {
    pub value: f64,
    pub riesz: Field,
}

impl DualNormResult {
    /// `(value^2, <f, g>_{L^2}, |g|^2)`; all three agree.
    pub fn evaluations(&self, f: &Field) -> (f64, f64, f64) {
        (self.value * self.value, l2_unchecked(f, &self.riesz), h1_unchecked(&self.riesz, &self.riesz))
    }
}

/// Solves `(-d_t^2 + mu_j + Lambda_FS) g_j = f_j` for each mode.
pub fn riesz_solve(f: &Field) -> DualNormResult {
    let g = f.grid();
    let n = g.n_t();
    let modes = exec::map_range(g.n_modes(), |j| {
        let fj = f.mode(j);
        let mut out = vec![0.0; n];
        if fj.iter().any(|v| *v != 0.0) {
            let mut x = fj[1..n - 1].to_vec();
            g.stiffness_lu(j).solve_in_place(&mut x);
            out[1..n - 1].copy_from_slice(&x);
        }
        out
    });
    let riesz = Field::from_modes(g, modes).expect("shape preserved");
    let value = l2_unchecked(f, &riesz).max(0.0).sqrt();
    DualNormResult { value, riesz }
}

pub fn dual_norm(f: &Field) -> f64 {
    riesz_solve(f).value
}

/// `S_FS^{-1}` as the Rayleigh quotient `|Psi|^2 / |Psi|^2_{L^{p+1}}` of the
/// discrete bubble centered at the node nearest the middle of the grid.
/// Cached per grid; this makes the discrete deficit of `Psi` vanish.
pub fn sobolev_constant(grid: &Arc<Grid>) -> f64 {
    grid.cached_s_inv(|| {
        let p = grid.params().p;
        let mid = grid.t(grid.nearest(0.5 * (grid.t_min() + grid.t_max())));
        let psi = bubbles::psi_profile(grid, mid);
        let lp = lp_norm(&psi, p + 1.0).expect("q = p + 1 > 1");
        h1_unchecked(&psi, &psi) / (lp * lp)
    })
}

/// `(int Psi^{p+1})^{(p-1)/(p+1)}` by quadrature of the closed-form bubble.
pub fn sobolev_constant_quadrature(grid: &Arc<Grid>) -> f64 {
    let p = grid.params().p;
    let mid = grid.t(grid.nearest(0.5 * (grid.t_min() + grid.t_max())));
    let psi = bubbles::psi_profile(grid, mid);
    let e = to_nodal(&psi).integrate(grid, |v| v.abs().powf(p + 1.0));
    e.powf((p - 1.0) / (p + 1.0))
}

/// `|u|^2 - S_FS^{-1} |u|^2_{L^{p+1}}`.
pub fn deficit(u: &Field) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::InvalidInput("deficit of the zero field".into()));
    }
    let g = u.grid();
    let s_inv = sobolev_constant(g);
    let lp = lp_norm(u, g.params().p + 1.0)?;
    Ok(norm(u).powi(2) - s_inv * lp * lp)
}

/// One-bubble energy `(S_FS^{-1})^{(p+1)/(p-1)}`.
pub fn bubble_energy(grid: &Arc<Grid>) -> f64 {
    let p = grid.params().p;
    sobolev_constant(grid).powf((p + 1.0) / (p - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BubbleCount {
    Within(usize),
    OutOfWindow,
}

impl BubbleCount {
    pub fn count(self) -> Option<usize> {
        match self {
            BubbleCount::Within(n) => Some(n),
            BubbleCount::OutOfWindow => None,
        }
    }
}

const WINDOW_TOL: f64 = 1e-9;

/// The `nu` with `(nu - 1/2) E < |u|^2 < (nu + 1/2) E`.
pub fn bubble_count(u: &Field) -> BubbleCount {
    let e = bubble_energy(u.grid());
    let x = norm(u).powi(2) / e;
    let nu = x.round();
    if nu < 1.0 || (x - nu).abs() > 0.5 - WINDOW_TOL {
        BubbleCount::OutOfWindow
    } else {
        BubbleCount::Within(nu as usize)
    }
}
