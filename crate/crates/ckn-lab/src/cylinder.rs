//! Axisymmetric discretization of the cylinder.
//!
//! A field is stored as one `t`-profile per zonal harmonic `P_j(cos phi)`,
//! normalized by `P_j(1) = 1`, so that mode 1 holds the coefficient of
//! `theta_d` itself. The orthonormal harmonics are `G_j = P_j / sqrt(n_j)`
//! with `n_j = |P_j|^2` on the sphere.
//!
//! In `t` the grid is uniform with homogeneous Dirichlet ends; `-d^2/dt^2`
//! uses the fourth-order five-point stencil on interior nodes.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::banded::{BandLu, Banded};
use crate::exec;
use crate::{Error, FsParameters, Result};

/// Eigenvalue `j(j+d-2)` of `-Delta_theta` on degree-`j` harmonics.
pub fn angular_eigenvalue(j: usize, d: usize) -> f64 {
    (j * (j + d - 2)) as f64
}

/// `Gamma(m/2)` for a positive integer `m`.
fn gamma_half(m: usize) -> f64 {
    assert!(m > 0);
    let (mut x, mut g) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while 2.0 * x < m as f64 - 0.5 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area of the unit sphere `S^{n}` in `R^{n+1}`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf((n as f64 + 1.0) / 2.0) / gamma_half(n + 1)
}

/// Quadrature in `x = cos phi` against the surface measure of `S^{d-1}`.
/// Exact for polynomials of degree `<= 2n - 1`.
pub fn angular_rule(d: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let total = sphere_area(d - 1);
    if d == 2 {
        // Equally spaced angles on the circle: the Gauss–Chebyshev rule in x.
        let mut x: Vec<f64> = (0..n).map(|k| ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos()).collect();
        x.reverse();
        return (x, vec![total / n as f64; n]);
    }
    // Golub–Welsch for the Gegenbauer weight (1 - x^2)^{(d-3)/2}.
    let al = (d as f64 - 3.0) / 2.0;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b2 = kf * (kf + 2.0 * al) / ((2.0 * kf + 2.0 * al + 1.0) * (2.0 * kf + 2.0 * al - 1.0));
        let b = b2.sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], total * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Zonal harmonics `P_j(x)` for `j = 0..=max_mode`, with `P_j(1) = 1`.
pub fn zonal_harmonics(d: usize, max_mode: usize, x: &[f64]) -> Vec<Vec<f64>> {
    let lam = (d as f64 - 2.0) / 2.0;
    let mut p = vec![vec![1.0; x.len()]];
    if max_mode >= 1 {
        p.push(x.to_vec());
    }
    for n in 1..max_mode {
        let nf = n as f64;
        let next = x
            .iter()
            .enumerate()
            .map(|(k, &xk)| (2.0 * (nf + lam) * xk * p[n][k] - nf * p[n - 1][k]) / (nf + 2.0 * lam))
            .collect();
        p.push(next);
    }
    p
}

#[derive(Debug)]
pub struct Grid {
    params: FsParameters,
    t_min: f64,
    t_max: f64,
    n_t: usize,
    h: f64,
    max_mode: usize,
    n_phi: usize,
    tail_bound: Option<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    harmonics: Vec<f64>,
    mode_weights: Vec<f64>,
    orthonormality_defect: f64,
    s_inv: OnceLock<f64>,
    stiffness_lu: OnceLock<Vec<BandLu>>,
}

impl Grid {
    /// Grid on `[t_min, t_max]` with `n_phi = 2 max_mode + 2`.
    pub fn new(params: FsParameters, t_min: f64, t_max: f64, n_t: usize, max_mode: usize) -> Result<Arc<Self>> {
        Self::with_n_phi(params, t_min, t_max, n_t, max_mode, 2 * max_mode + 2)
    }

    pub fn with_n_phi(
        params: FsParameters,
        t_min: f64,
        t_max: f64,
        n_t: usize,
        max_mode: usize,
        n_phi: usize,
    ) -> Result<Arc<Self>> {
        if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
            return Err(Error::InvalidParameter(format!("need t_min < t_max, got [{t_min}, {t_max}]")));
        }
        if n_t < 3 {
            return Err(Error::InvalidParameter(format!("n_t must be at least 3, got {n_t}")));
        }
        if n_phi < 2 * max_mode + 2 {
            return Err(Error::InvalidParameter(format!(
                "n_phi = {n_phi} is below 2 max_mode + 2 = {}",
                2 * max_mode + 2
            )));
        }
        let d = params.d;
        let (nodes, weights) = angular_rule(d, n_phi);
        let p = zonal_harmonics(d, max_mode, &nodes);
        let mode_weights: Vec<f64> =
            p.iter().map(|pj| pj.iter().zip(&weights).map(|(v, w)| v * v * w).sum()).collect();
        let mut defect = 0.0f64;
        for i in 0..=max_mode {
            for j in 0..=max_mode {
                let g: f64 = (0..n_phi).map(|k| p[i][k] * p[j][k] * weights[k]).sum::<f64>()
                    / (mode_weights[i] * mode_weights[j]).sqrt();
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((g - target).abs());
            }
        }
        if defect > 1e-10 {
            return Err(Error::InvalidParameter(format!("angular quadrature lost orthonormality ({defect:.2e})")));
        }
        let harmonics = p.into_iter().flatten().collect();
        Ok(Arc::new(Self {
            params: FsParameters { s_inv: None, ..params },
            t_min,
            t_max,
            n_t,
            h: (t_max - t_min) / (n_t - 1) as f64,
            max_mode,
            n_phi,
            tail_bound: None,
            nodes,
            weights,
            harmonics,
            mode_weights,
            orthonormality_defect: defect,
            s_inv: OnceLock::new(),
            stiffness_lu: OnceLock::new(),
        }))
    }

    /// Grid covering `centers` with `pad` on both sides.
    pub fn around(params: FsParameters, centers: &[f64], pad: f64, n_t: usize, max_mode: usize) -> Result<Arc<Self>> {
        if centers.is_empty() {
            return Err(Error::InvalidParameter("at least one center is required".into()));
        }
        if !(pad > 0.0) {
            return Err(Error::InvalidParameter(format!("pad must be positive, got {pad}")));
        }
        let lo = centers.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let g = Self::new(params, lo - pad, hi + pad, n_t, max_mode)?;
        let mut g = Arc::try_unwrap(g).expect("fresh grid");
        g.tail_bound = Some((-params.sqrt_lambda() * pad).exp());
        Ok(Arc::new(g))
    }

    /// `40 / sqrt(Lambda_FS)`.
    pub fn default_pad(params: &FsParameters) -> f64 {
        40.0 / params.sqrt_lambda()
    }

    pub fn params(&self) -> &FsParameters {
        &self.params
    }
    pub fn d(&self) -> usize {
        self.params.d
    }
    pub fn t_min(&self) -> f64 {
        self.t_min
    }
    pub fn t_max(&self) -> f64 {
        self.t_max
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn max_mode(&self) -> usize {
        self.max_mode
    }
    pub fn n_modes(&self) -> usize {
        self.max_mode + 1
    }
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }
    /// `exp(-sqrt(Lambda_FS) pad)` when the grid was built from centers.
    pub fn tail_bound(&self) -> Option<f64> {
        self.tail_bound
    }
    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.n_t {
            self.t_max
        } else {
            self.t_min + i as f64 * self.h
        }
    }
    pub fn ts(&self) -> Vec<f64> {
        (0..self.n_t).map(|i| self.t(i)).collect()
    }
    /// Angular nodes `x_k = cos phi_k`.
    pub fn angular_nodes(&self) -> &[f64] {
        &self.nodes
    }
    /// Angular weights, summing to `|S^{d-1}|`.
    pub fn angular_weights(&self) -> &[f64] {
        &self.weights
    }
    /// `P_j(x_k)`.
    pub fn harmonic(&self, j: usize) -> &[f64] {
        &self.harmonics[j * self.n_phi..(j + 1) * self.n_phi]
    }
    /// `n_j = integral of P_j^2` over the sphere.
    pub fn mode_weight(&self, j: usize) -> f64 {
        self.mode_weights[j]
    }
    pub fn mu(&self, j: usize) -> f64 {
        angular_eigenvalue(j, self.params.d)
    }
    /// Max deviation of the `G_j` Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        self.orthonormality_defect
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other)
            || (self.params.d == other.params.d
                && self.params.p == other.params.p
                && self.t_min == other.t_min
                && self.t_max == other.t_max
                && self.n_t == other.n_t
                && self.max_mode == other.max_mode
                && self.n_phi == other.n_phi)
    }

    /// Index of the node closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        (((t - self.t_min) / self.h).round().max(0.0) as usize).min(self.n_t - 1)
    }

    pub(crate) fn cached_s_inv(&self, compute: impl FnOnce() -> f64) -> f64 {
        *self.s_inv.get_or_init(compute)
    }

    /// Parameters with `s_inv` filled from this grid, if already computed.
    pub fn params_with_s_inv(&self) -> FsParameters {
        FsParameters { s_inv: self.s_inv.get().copied(), ..self.params }
    }

    /// `(-d^2/dt^2 + mu_j + Lambda_FS)` on interior nodes as a pentadiagonal matrix.
    pub fn stiffness(&self, j: usize) -> Banded {
        let n = self.n_t - 2;
        let c = 1.0 / (12.0 * self.h * self.h);
        let diag = 30.0 * c + self.mu(j) + self.params.lambda_fs;
        let mut m = Banded::zeros(n, 2, 2);
        for i in 0..n {
            m.set(i, i, diag);
            if i >= 1 {
                m.set(i, i - 1, -16.0 * c);
            }
            if i >= 2 {
                m.set(i, i - 2, c);
            }
            if i + 1 < n {
                m.set(i, i + 1, -16.0 * c);
            }
            if i + 2 < n {
                m.set(i, i + 2, c);
            }
        }
        m
    }

    /// Cached factorization of [`Grid::stiffness`].
    pub fn stiffness_lu(&self, j: usize) -> &BandLu {
        &self.stiffness_lu.get_or_init(|| {
            (0..self.n_modes()).map(|m| self.stiffness(m).lu().expect("stiffness is positive definite")).collect()
        })[j]
    }

    /// Stiffness of mode `j` applied to a full-length profile; boundary
    /// entries of input and output are treated as zero.
    pub fn apply_stiffness(&self, j: usize, u: &[f64]) -> Vec<f64> {
        let n = self.n_t;
        assert_eq!(u.len(), n);
        let c = 1.0 / (12.0 * self.h * self.h);
        let diag = 30.0 * c + self.mu(j) + self.params.lambda_fs;
        let at = |k: isize| -> f64 {
            if k >= 1 && (k as usize) < n - 1 {
                u[k as usize]
            } else {
                0.0
            }
        };
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            let k = i as isize;
            out[i] = c * (at(k - 2) + at(k + 2)) - 16.0 * c * (at(k - 1) + at(k + 1)) + diag * u[i];
        }
        out
    }

    /// `n_j h sum u v` over interior nodes.
    pub fn mode_l2(&self, j: usize, u: &[f64], v: &[f64]) -> f64 {
        self.mode_weights[j] * self.h * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    /// H^1 product restricted to mode `j`.
    pub fn mode_h1(&self, j: usize, u: &[f64], v: &[f64]) -> f64 {
        self.mode_l2(j, &self.apply_stiffness(j, u), v)
    }

    /// Evaluate a profile `g(t)` on the nodes with zero boundary values.
    pub fn sample(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.n_t).map(|i| g(self.t(i))).collect();
        out[0] = 0.0;
        out[self.n_t - 1] = 0.0;
        out
    }
}

/// A function on the cylinder: one profile per zonal harmonic.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    modes: Vec<Vec<f64>>,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), modes: vec![vec![0.0; grid.n_t]; grid.n_modes()] }
    }

    /// Builds a field from profiles; boundary values are forced to zero.
    pub fn from_modes(grid: &Arc<Grid>, mut modes: Vec<Vec<f64>>) -> Result<Self> {
        if modes.len() != grid.n_modes() {
            return Err(Error::InvalidInput(format!("expected {} modes, got {}", grid.n_modes(), modes.len())));
        }
        for (j, m) in modes.iter_mut().enumerate() {
            if m.len() != grid.n_t {
                return Err(Error::InvalidInput(format!(
                    "mode {j} has {} values, expected {}",
                    m.len(),
                    grid.n_t
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("mode {j} has non-finite values")));
            }
            m[0] = 0.0;
            let last = m.len() - 1;
            m[last] = 0.0;
        }
        Ok(Self { grid: grid.clone(), modes })
    }

    /// Field with a single nonzero mode.
    pub fn single_mode(grid: &Arc<Grid>, j: usize, mut profile: Vec<f64>) -> Self {
        assert!(j <= grid.max_mode, "mode {j} above max_mode {}", grid.max_mode);
        assert_eq!(profile.len(), grid.n_t);
        profile[0] = 0.0;
        let n = profile.len();
        profile[n - 1] = 0.0;
        let mut f = Self::zeros(grid);
        f.modes[j] = profile;
        f
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }
    pub fn mode(&self, j: usize) -> &[f64] {
        &self.modes[j]
    }
    pub fn mode_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.modes[j]
    }
    pub fn into_modes(self) -> Vec<Vec<f64>> {
        self.modes
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        self.grid.same_as(&other.grid)
    }

    pub fn check_grid(&self, other: &Field) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.iter().all(|v| *v == 0.0))
    }

    pub fn scaled(&self, c: f64) -> Field {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn scale(&mut self, c: f64) {
        for m in &mut self.modes {
            for v in m.iter_mut() {
                *v *= c;
            }
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Field) {
        debug_assert!(self.same_grid(other));
        for (a, b) in self.modes.iter_mut().zip(&other.modes) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += c * y;
            }
        }
    }

    /// Largest absolute value among all profiles.
    pub fn max_abs(&self) -> f64 {
        self.modes.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Values on the `(t_i, phi_k)` lattice.
    pub fn to_nodal(&self) -> Nodal {
        to_nodal(self)
    }
}

impl Add<&Field> for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub<&Field> for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scaled(self)
    }
}

/// Nodal values, row-major over `(t_i, phi_k)`.
#[derive(Clone, Debug)]
pub struct Nodal {
    pub n_t: usize,
    pub n_phi: usize,
    pub values: Vec<f64>,
}

impl Nodal {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_phi..(i + 1) * self.n_phi]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Nodal {
        Nodal { n_t: self.n_t, n_phi: self.n_phi, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Quadrature of `f(value)` over the cylinder.
    pub fn integrate(&self, grid: &Grid, f: impl Fn(f64) -> f64) -> f64 {
        let w = grid.angular_weights();
        let mut s = 0.0;
        for i in 1..self.n_t - 1 {
            s += self.row(i).iter().zip(w).map(|(v, wk)| f(*v) * wk).sum::<f64>();
        }
        s * grid.h()
    }
}

const ROW_CHUNK: usize = 256;

pub fn to_nodal(f: &Field) -> Nodal {
    let g = f.grid();
    let (n_t, n_phi, nm) = (g.n_t, g.n_phi, g.n_modes());
    let chunks = exec::map_range(n_t.div_ceil(ROW_CHUNK), |c| {
        let lo = c * ROW_CHUNK;
        let hi = (lo + ROW_CHUNK).min(n_t);
        let mut out = vec![0.0; (hi - lo) * n_phi];
        for i in lo..hi {
            let row = &mut out[(i - lo) * n_phi..(i - lo + 1) * n_phi];
            for j in 0..nm {
                let c = f.modes[j][i];
                if c != 0.0 {
                    for (r, pk) in row.iter_mut().zip(g.harmonic(j)) {
                        *r += c * pk;
                    }
                }
            }
        }
        out
    });
    Nodal { n_t, n_phi, values: chunks.concat() }
}

/// Projection of nodal values onto the modes `0..=max_mode`.
pub fn from_nodal(grid: &Arc<Grid>, nodal: &Nodal) -> Field {
    let (n_t, n_phi, nm) = (grid.n_t, grid.n_phi, grid.n_modes());
    assert_eq!(nodal.n_t, n_t);
    assert_eq!(nodal.n_phi, n_phi);
    let w = grid.angular_weights();
    let proj: Vec<Vec<f64>> = (0..nm)
        .map(|j| grid.harmonic(j).iter().zip(w).map(|(p, wk)| p * wk / grid.mode_weights[j]).collect())
        .collect();
    let chunks = exec::map_range(n_t.div_ceil(ROW_CHUNK), |c| {
        let lo = c * ROW_CHUNK;
        let hi = (lo + ROW_CHUNK).min(n_t);
        let mut out = vec![vec![0.0; hi - lo]; nm];
        for i in lo..hi {
            let row = nodal.row(i);
            for j in 0..nm {
                out[j][i - lo] = row.iter().zip(&proj[j]).map(|(v, q)| v * q).sum();
            }
        }
        out
    });
    let mut modes = vec![Vec::with_capacity(n_t); nm];
    for chunk in chunks {
        for (m, part) in modes.iter_mut().zip(chunk) {
            m.extend(part);
        }
    }
    for m in &mut modes {
        m[0] = 0.0;
        m[n_t - 1] = 0.0;
    }
    Field { grid: grid.clone(), modes }
}

/// Result of a nodal power with the energy left outside the retained modes.
#[derive(Clone, Debug)]
pub struct PowerResult {
    pub field: Field,
    /// Fraction of the nodal `L^2` energy not captured by modes `<= max_mode`.
    pub tail_energy: f64,
}

/// `|f|^{q-1} f` (signed) or `|f|^q`, evaluated nodally and projected back.
pub fn pointwise_power(f: &Field, q: f64, signed: bool) -> PowerResult {
    assert!(q > 0.0, "power must be positive");
    let grid = f.grid();
    let nodal = to_nodal(f).map(|v| {
        let a = v.abs().powf(q);
        if signed && v < 0.0 {
            -a
        } else {
            a
        }
    });
    let field = from_nodal(grid, &nodal);
    let total = nodal.integrate(grid, |v| v * v);
    let kept: f64 = (0..grid.n_modes()).map(|j| grid.mode_l2(j, &field.modes[j], &field.modes[j])).sum();
    let tail_energy = if total > 0.0 { ((total - kept) / total).max(0.0) } else { 0.0 };
    PowerResult { field, tail_energy }
}
