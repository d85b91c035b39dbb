//! Optimal bubble decomposition: amplitudes and centers by Newton's method
//! on `|v - sum alpha_j Psi_{s_j}|^2`, then projection of the remainder
//! onto the nontrivial kernels.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bubbles::{self, BubbleSpec};
use crate::calculus::{self, BubbleCount};
use crate::exec;
use crate::{Error, Field, Grid, Result};

/// Relative stationarity required of a fit.
pub const STATIONARITY_TOL: f64 = 1e-9;
/// Centers closer than this are treated as a collapse.
pub const MIN_GAP: f64 = 1.0;
const MAX_ITER: usize = 100;

#[derive(Clone, Debug)]
pub struct FitResult {
    /// Sorted by center.
    pub specs: Vec<BubbleSpec>,
    /// `v - sum alpha_j Psi_{s_j}`.
    pub rho: Field,
    pub iterations: usize,
    /// Largest relative first-order condition at the returned point.
    pub stationarity: f64,
}

/// Mode-0 data of one bubble at the current iterate.
struct Atom {
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    d2psi: Vec<f64>,
    a_psi: Vec<f64>,
    a_dpsi: Vec<f64>,
}

fn atom(grid: &Grid, s: f64) -> Atom {
    let params = *grid.params();
    let psi = grid.sample(|t| bubbles::psi(&params, t - s));
    let dpsi = grid.sample(|t| bubbles::dpsi(&params, t - s));
    let d2psi = grid.sample(|t| bubbles::d2psi(&params, t - s));
    let a_psi = grid.apply_stiffness(0, &psi);
    let a_dpsi = grid.apply_stiffness(0, &dpsi);
    Atom { psi, dpsi, d2psi, a_psi, a_dpsi }
}

struct Fitter<'a> {
    grid: &'a Grid,
    v0: &'a [f64],
    a_v0: Vec<f64>,
    /// `|v|^2` over all modes.
    v_norm2: f64,
}

struct State {
    alpha: Vec<f64>,
    s: Vec<f64>,
    atoms: Vec<Atom>,
    r0: Vec<f64>,
    a_r0: Vec<f64>,
    obj: f64,
}

impl<'a> Fitter<'a> {
    fn ip(&self, a: &[f64], b: &[f64]) -> f64 {
        self.grid.mode_l2(0, a, b)
    }

    /// Optimal amplitudes at fixed centers.
    fn state(&self, s: &[f64]) -> Result<State> {
        let nu = s.len();
        let atoms: Vec<Atom> = s.iter().map(|&c| atom(self.grid, c)).collect();
        let g = DMatrix::from_fn(nu, nu, |i, k| self.ip(&atoms[i].a_psi, &atoms[k].psi));
        let b = DVector::from_fn(nu, |i, _| self.ip(&self.a_v0, &atoms[i].psi));
        let alpha = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("bubble Gram matrix".into()))?
            .solve(&b);
        let alpha: Vec<f64> = alpha.iter().cloned().collect();
        Ok(self.with_alpha(s.to_vec(), alpha, atoms))
    }

    fn with_alpha(&self, s: Vec<f64>, alpha: Vec<f64>, atoms: Vec<Atom>) -> State {
        let mut r0 = self.v0.to_vec();
        let mut a_r0 = self.a_v0.clone();
        for (a, at) in alpha.iter().zip(&atoms) {
            for i in 0..r0.len() {
                r0[i] -= a * at.psi[i];
                a_r0[i] -= a * at.a_psi[i];
            }
        }
        // Only mode 0 depends on the parameters; leaving out the constant
        // rest keeps the line search meaningful when the remainder is tiny.
        let obj = self.ip(&a_r0, &r0);
        State { alpha, s, atoms, r0, a_r0, obj }
    }

    /// Gradient and Hessian of `|r|^2 / 2` in `(alpha, s)`.
    fn derivatives(&self, st: &State) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
        let nu = st.s.len();
        // Columns of the Jacobian of the model: Psi_j and -alpha_j Psi_j'.
        let col = |a: usize| -> (Vec<f64>, Vec<f64>, f64) {
            if a < nu {
                (st.atoms[a].psi.clone(), st.atoms[a].a_psi.clone(), 1.0)
            } else {
                let j = a - nu;
                (st.atoms[j].dpsi.clone(), st.atoms[j].a_dpsi.clone(), -st.alpha[j])
            }
        };
        let cols: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..2 * nu).map(col).collect();
        let jtj = DMatrix::from_fn(2 * nu, 2 * nu, |a, b| cols[a].2 * cols[b].2 * self.ip(&cols[a].1, &cols[b].0));
        let grad = DVector::from_fn(2 * nu, |a, _| -cols[a].2 * self.ip(&st.a_r0, &cols[a].0));
        let mut hess = jtj.clone();
        for j in 0..nu {
            let r_dpsi = self.ip(&st.a_r0, &st.atoms[j].dpsi);
            hess[(j, nu + j)] += r_dpsi;
            hess[(nu + j, j)] += r_dpsi;
            hess[(nu + j, nu + j)] -= st.alpha[j] * self.ip(&st.a_r0, &st.atoms[j].d2psi);
        }
        (grad, hess, jtj)
    }

    fn stationarity(&self, st: &State) -> f64 {
        let vn = self.v_norm2.sqrt().max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for at in &st.atoms {
            let np = self.ip(&at.a_psi, &at.psi).sqrt();
            let nd = self.ip(&at.a_dpsi, &at.dpsi).sqrt();
            worst = worst.max(self.ip(&st.a_r0, &at.psi).abs() / (vn * np));
            worst = worst.max(self.ip(&st.a_r0, &at.dpsi).abs() / (vn * nd));
        }
        worst
    }
}

fn check_gaps(s: &[f64]) -> Result<()> {
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    for w in sorted.windows(2) {
        if w[1] - w[0] < MIN_GAP {
            return Err(Error::CollapsedCenters { gap: w[1] - w[0] });
        }
    }
    Ok(())
}

/// Seeds from the `nu` largest well-separated local maxima of mode 0.
pub fn seed_bubbles(v: &Field, nu: usize) -> Result<Vec<BubbleSpec>> {
    let grid = v.grid();
    let v0 = v.mode(0);
    let mut maxima: Vec<(usize, f64)> = (1..grid.n_t() - 1)
        .filter(|&i| v0[i] > 0.0 && v0[i] > v0[i - 1] && v0[i] >= v0[i + 1])
        .map(|i| (i, v0[i]))
        .collect();
    maxima.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let peak = bubbles::psi_peak(grid.params());
    let mut picked: Vec<BubbleSpec> = Vec::with_capacity(nu);
    for (i, val) in maxima {
        let t = grid.t(i);
        if picked.iter().all(|b| (b.center - t).abs() >= MIN_GAP) {
            picked.push(BubbleSpec { alpha: val / peak, center: t });
            if picked.len() == nu {
                break;
            }
        }
    }
    if picked.len() < nu {
        return Err(Error::InvalidInput(format!(
            "found {} separated maxima in mode 0, need {nu}",
            picked.len()
        )));
    }
    picked.sort_by(|a, b| a.center.total_cmp(&b.center));
    Ok(picked)
}

/// Critical point of `|v - sum alpha_j Psi_{s_j}|^2`.
pub fn fit_bubbles(v: &Field, nu: usize, init: Option<&[BubbleSpec]>) -> Result<FitResult> {
    if nu == 0 {
        return Err(Error::InvalidParameter("nu must be at least 1".into()));
    }
    let seeds = match init {
        Some(s) if s.len() == nu => s.to_vec(),
        Some(s) => {
            return Err(Error::InvalidParameter(format!("{} initial bubbles for nu = {nu}", s.len())));
        }
        None => seed_bubbles(v, nu)?,
    };
    let grid = v.grid();
    let v0 = v.mode(0);
    let a_v0 = grid.apply_stiffness(0, v0);
    let fitter = Fitter { grid, v0, a_v0, v_norm2: calculus::norm(v).powi(2) };
    let max_step = 1.0 / grid.params().sqrt_lambda();

    let mut st = fitter.state(&seeds.iter().map(|b| b.center).collect::<Vec<_>>())?;
    let mut iterations = 0;
    let mut settled = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let (grad, hess, jtj) = fitter.derivatives(&st);
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => match jtj.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => return Err(Error::Singular("Gauss–Newton normal matrix".into())),
            },
        };
        let nu = st.s.len();
        let ds: Vec<f64> = (0..nu).map(|j| step[nu + j]).collect();
        let big = ds.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let shrink = if big > max_step { max_step / big } else { 1.0 };
        let mut lambda = shrink;
        let mut accepted = None;
        for _ in 0..40 {
            let s_new: Vec<f64> = st.s.iter().zip(&ds).map(|(s, d)| s + lambda * d).collect();
            check_gaps(&s_new)?;
            let cand = fitter.state(&s_new)?;
            if cand.obj <= st.obj * (1.0 + 1e-14) + 1e-300 {
                accepted = Some(cand);
                break;
            }
            lambda *= 0.5;
        }
        let moved = lambda * big;
        match accepted {
            Some(c) => st = c,
            None => {
                // No decrease at any step length: already at roundoff level.
                settled += 1;
            }
        }
        let stat = fitter.stationarity(&st);
        let scale = 1.0 + st.s.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if stat <= STATIONARITY_TOL && (moved <= 1e-15 * scale || settled > 0) {
            break;
        }
        if settled > 2 {
            break;
        }
    }
    let stationarity = fitter.stationarity(&st);
    if stationarity > STATIONARITY_TOL {
        return Err(Error::NoConvergence { iterations, gradient: stationarity });
    }
    let mut specs: Vec<BubbleSpec> =
        st.alpha.iter().zip(&st.s).map(|(&alpha, &center)| BubbleSpec { alpha, center }).collect();
    specs.sort_by(|a, b| a.center.total_cmp(&b.center));
    let mut rho = v.clone();
    rho.mode_mut(0).copy_from_slice(&st.r0);
    Ok(FitResult { specs, rho, iterations, stationarity })
}

/// Kernel coefficients from the Gram system of `w_{j,d}` and the remainder.
pub fn project_kernels(rho: &Field, specs: &[BubbleSpec]) -> Result<(Vec<f64>, Field)> {
    let grid = rho.grid();
    let d = grid.d();
    let ws: Vec<Field> = specs.iter().map(|b| bubbles::kernel_profile(grid, b.center, d)).collect::<Result<_>>()?;
    let n = ws.len();
    let gram = DMatrix::from_fn(n, n, |i, k| calculus::h1_unchecked(&ws[i], &ws[k]));
    let rhs = DVector::from_fn(n, |i, _| calculus::h1_unchecked(&ws[i], rho));
    let sv = gram.clone().svd(false, false).singular_values;
    if !(sv.min() > 0.0 && sv.max() / sv.min() < 1e12) {
        return Err(Error::Singular("kernel Gram matrix (coinciding centers)".into()));
    }
    let betas = gram.lu().solve(&rhs).ok_or_else(|| Error::Singular("kernel Gram matrix".into()))?;
    let mut rho_star = rho.clone();
    for (b, w) in betas.iter().zip(&ws) {
        rho_star.axpy(-b, w);
    }
    Ok((betas.iter().cloned().collect(), rho_star))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionResult {
    pub specs: Vec<BubbleSpec>,
    pub betas: Vec<f64>,
    #[serde(skip)]
    pub rho: Field,
    #[serde(skip)]
    pub rho_star: Field,
    /// `|<rho_*, c>| / (|c| max(|rho_*|, floor))` per constraint `c`.
    pub ortho_residuals: BTreeMap<String, f64>,
    pub dist: f64,
    pub rho_star_norm: f64,
    /// `sum_j beta_j^2 |w_{j,d}|^2`.
    pub kernel_energy: f64,
    /// `dist^2 / (kernel_energy + |rho_*|^2)`.
    pub equivalence_ratio: f64,
    /// `exp(-sqrt(Lambda_FS) * min gap)`, zero for a single bubble.
    pub q: f64,
    pub bubble_count: BubbleCount,
    pub nu_in_window: bool,
    pub iterations: usize,
    pub stationarity: f64,
}

/// Tolerance for the orthogonality residuals.
pub const ORTHO_TOL: f64 = 1e-8;
/// Remainders smaller than this fraction of `|v|` are measured against it.
const ORTHO_FLOOR: f64 = 1e-5;

impl DecompositionResult {
    pub fn orthogonality_ok(&self) -> bool {
        self.ortho_residuals.values().all(|r| *r <= ORTHO_TOL)
    }
}

pub fn decompose(v: &Field, nu: usize) -> Result<DecompositionResult> {
    decompose_from(v, nu, None)
}

pub fn decompose_from(v: &Field, nu: usize, init: Option<&[BubbleSpec]>) -> Result<DecompositionResult> {
    let fit = fit_bubbles(v, nu, init)?;
    let grid = v.grid();
    let (betas, rho_star) = project_kernels(&fit.rho, &fit.specs)?;
    let rs_norm = calculus::norm(&rho_star);
    let floor = ORTHO_FLOOR * calculus::norm(v);
    let mut ortho = BTreeMap::new();
    let mut kernel_energy = 0.0;
    for (j, b) in fit.specs.iter().enumerate() {
        let k = j + 1;
        let psi = bubbles::psi_profile(grid, b.center);
        let dpsi = bubbles::dpsi_profile(grid, b.center);
        let w = bubbles::kernel_profile(grid, b.center, grid.d())?;
        for (name, c) in [("psi", &psi), ("dpsi", &dpsi), ("w", &w)] {
            let r = calculus::h1_unchecked(&rho_star, c).abs() / (calculus::norm(c) * rs_norm.max(floor));
            ortho.insert(format!("{name}_{k}"), r);
        }
        kernel_energy += betas[j] * betas[j] * calculus::norm(&w).powi(2);
    }
    let dist = calculus::norm(&fit.rho);
    let denom = kernel_energy + rs_norm * rs_norm;
    let q = min_gap(&fit.specs).map_or(0.0, |g| (-grid.params().sqrt_lambda() * g).exp());
    let count = calculus::bubble_count(v);
    Ok(DecompositionResult {
        betas,
        rho: fit.rho,
        rho_star,
        ortho_residuals: ortho,
        dist,
        rho_star_norm: rs_norm,
        kernel_energy,
        equivalence_ratio: if denom > 0.0 { dist * dist / denom } else { 1.0 },
        q,
        nu_in_window: count == BubbleCount::Within(nu),
        bubble_count: count,
        iterations: fit.iterations,
        stationarity: fit.stationarity,
        specs: fit.specs,
    })
}

fn min_gap(specs: &[BubbleSpec]) -> Option<f64> {
    specs.windows(2).map(|w| w[1].center - w[0].center).reduce(f64::min)
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifoldDistance {
    pub dist: f64,
    pub specs: Vec<BubbleSpec>,
    /// Distance reached from each start; `None` where the start failed.
    pub starts: Vec<Option<f64>>,
    pub seed: u64,
}

/// Number of perturbed restarts besides the structured seed.
pub const RESTARTS: usize = 3;

/// Least fitted distance over the structured seed and [`RESTARTS`]
/// perturbations of it drawn from `seed`.
pub fn manifold_distance(v: &Field, nu: usize, seed: u64) -> Result<ManifoldDistance> {
    let base = seed_bubbles(v, nu)?;
    let width = 0.5 / v.grid().params().sqrt_lambda();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![base.clone()];
    for _ in 0..RESTARTS {
        starts.push(
            base.iter()
                .map(|b| BubbleSpec {
                    alpha: b.alpha * (1.0 + rng.random_range(-0.05..0.05)),
                    center: b.center + rng.random_range(-width..width),
                })
                .collect(),
        );
    }
    let fits = exec::map_slice(&starts, |init| fit_bubbles(v, nu, Some(init)));
    let mut best: Option<FitResult> = None;
    let mut dists = Vec::with_capacity(fits.len());
    let mut first_err = None;
    for f in fits {
        match f {
            Ok(fit) => {
                let d = calculus::norm(&fit.rho);
                dists.push(Some(d));
                if best.as_ref().is_none_or(|b| d < calculus::norm(&b.rho)) {
                    best = Some(fit);
                }
            }
            Err(e) => {
                dists.push(None);
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(b) => Ok(ManifoldDistance { dist: calculus::norm(&b.rho), specs: b.specs, starts: dists, seed }),
        None => Err(first_err.expect("at least one start")),
    }
}
