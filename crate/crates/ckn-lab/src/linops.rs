//! The linearization around a bubble sum and bordered solves that enforce
//! kernel orthogonality through Lagrange multipliers.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bubbles::{self, BubbleSpec};
use crate::calculus::apply_a;
use crate::exec;
use crate::{Error, Field, Grid, Result};

/// Worst tolerated condition estimate of a bordered block.
pub const MAX_CONDITION: f64 = 1e12;

/// `(sum a_j)^q - a_m^q` where `a_m` is the largest term, without
/// cancellation when the other terms are small.
fn excess_over(q: f64, big: f64, rest: f64) -> f64 {
    if big <= 0.0 {
        return rest.powf(q);
    }
    big.powf(q) * (q * (rest / big).ln_1p()).exp_m1()
}

/// `(sum a)^p - sum a^p` for nonnegative terms.
pub fn power_excess(p: f64, terms: &[f64]) -> f64 {
    let (m, big) = terms
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let rest: f64 = terms.iter().enumerate().filter(|(i, _)| *i != m).map(|(_, v)| v).sum();
    let others: f64 = terms.iter().enumerate().filter(|(i, _)| *i != m).map(|(_, v)| v.powf(p)).sum();
    excess_over(p, big, rest) - others
}

/// `(U^{q} - a^{q})` with `U = a + rest`.
pub fn power_difference(q: f64, a: f64, rest: f64) -> f64 {
    excess_over(q, a, rest)
}

/// `p U^{p-1}(t)` on the nodes.
pub fn potential(grid: &Grid, specs: &[BubbleSpec]) -> Vec<f64> {
    let params = *grid.params();
    let p = params.p;
    (0..grid.n_t())
        .map(|i| {
            let t = grid.t(i);
            let u: f64 = specs.iter().map(|b| b.alpha * bubbles::psi(&params, t - b.center)).sum();
            p * u.powf(p - 1.0)
        })
        .collect()
}

/// `L g = (-d_t^2 - Delta_theta + Lambda_FS - p U^{p-1}) g`.
pub fn apply_l(specs: &[BubbleSpec], g: &Field) -> Field {
    let v = potential(g.grid(), specs);
    apply_with_potential(&v, g)
}

pub fn apply_with_potential(v: &[f64], g: &Field) -> Field {
    let mut out = apply_a(g);
    let n = v.len();
    for j in 0..g.grid().n_modes() {
        let gj = g.mode(j);
        let oj = out.mode_mut(j);
        for i in 1..n - 1 {
            oj[i] -= v[i] * gj[i];
        }
    }
    out
}

/// Which orthogonality conditions apply around one bubble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BubbleConstraints {
    /// `<gamma, d_t Psi_j> = 0`, carrier `Psi_j^{p-1} d_t Psi_j`.
    pub trivial: bool,
    /// `<gamma, w_{j,d}> = 0`, carrier `Psi_j^{p-1} w_{j,d}`.
    pub nontrivial: bool,
    /// `<gamma, Psi_j> = 0`, carrier `Psi_j^p`.
    pub bubble: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintSet {
    pub centers: Vec<f64>,
    pub flags: Vec<BubbleConstraints>,
}

impl ConstraintSet {
    /// Trivial and nontrivial kernel conditions at every center.
    pub fn kernels(centers: &[f64]) -> Self {
        Self::uniform(centers, BubbleConstraints { trivial: true, nontrivial: true, bubble: false })
    }

    /// Kernel conditions plus orthogonality to the bubbles themselves.
    pub fn kernels_and_bubbles(centers: &[f64]) -> Self {
        Self::uniform(centers, BubbleConstraints { trivial: true, nontrivial: true, bubble: true })
    }

    pub fn uniform(centers: &[f64], flags: BubbleConstraints) -> Self {
        Self { centers: centers.to_vec(), flags: vec![flags; centers.len()] }
    }

    pub fn is_empty(&self) -> bool {
        self.flags.iter().all(|f| !(f.trivial || f.nontrivial || f.bubble))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Trivial,
    Nontrivial,
    Bubble,
}

struct Condition {
    bubble: usize,
    kind: Kind,
    mode: usize,
    constraint: Vec<f64>,
    carrier: Vec<f64>,
}

fn conditions(grid: &Grid, set: &ConstraintSet) -> Vec<Condition> {
    let params = *grid.params();
    let p = params.p;
    let mut out = Vec::new();
    for (b, (&s, f)) in set.centers.iter().zip(&set.flags).enumerate() {
        let psi = |t: f64| bubbles::psi(&params, t - s);
        if f.trivial {
            let dpsi = |t: f64| bubbles::dpsi(&params, t - s);
            out.push(Condition {
                bubble: b,
                kind: Kind::Trivial,
                mode: 0,
                constraint: grid.sample(dpsi),
                carrier: grid.sample(|t| psi(t).powf(p - 1.0) * dpsi(t)),
            });
        }
        if f.nontrivial && grid.max_mode() >= 1 {
            let w = |t: f64| bubbles::kernel_radial(&params, t - s);
            out.push(Condition {
                bubble: b,
                kind: Kind::Nontrivial,
                mode: 1,
                constraint: grid.sample(w),
                carrier: grid.sample(|t| psi(t).powf(p - 1.0) * w(t)),
            });
        }
        if f.bubble {
            out.push(Condition {
                bubble: b,
                kind: Kind::Bubble,
                mode: 0,
                constraint: grid.sample(psi),
                carrier: grid.sample(|t| psi(t).powf(p)),
            });
        }
    }
    out
}

/// Lagrange multipliers of a constrained solve, indexed by bubble.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MultiplierSet {
    /// Multipliers of the trivial-kernel carriers.
    pub c: Vec<f64>,
    /// Multipliers of the nontrivial-kernel carriers.
    pub sigma: Vec<f64>,
    /// Multipliers of the bubble carriers, when requested.
    pub psi: Vec<f64>,
    /// Largest relative residual of the bordered systems.
    pub residual: f64,
    /// Largest condition estimate among the bordered blocks.
    pub condition: f64,
}

struct ModeSolve {
    gamma: Vec<f64>,
    mult: Vec<f64>,
    residual: f64,
    condition: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn bordered_mode(grid: &Grid, j: usize, pot: &[f64], rhs: &[f64], conds: &[&Condition]) -> Result<ModeSolve> {
    let nt = grid.n_t();
    let n = nt - 2;
    let mut k = grid.stiffness(j);
    let negpot: Vec<f64> = pot[1..nt - 1].iter().map(|v| -v).collect();
    k.add_diagonal(&negpot);
    let r: Vec<f64> = rhs[1..nt - 1].to_vec();
    let rn = norm2(&r);
    if rn == 0.0 {
        return Ok(ModeSolve { gamma: vec![0.0; nt], mult: vec![0.0; conds.len()], residual: 0.0, condition: 1.0 });
    }
    let lu = k.lu().map_err(|_| Error::IllConditioned { mode: j, estimate: f64::INFINITY })?;
    let m = conds.len();
    if m == 0 {
        let mut x = r.clone();
        lu.solve_in_place(&mut x);
        let mut kx = vec![0.0; n];
        k.matvec(&x, &mut kx);
        let res = norm2(&kx.iter().zip(&r).map(|(a, b)| a - b).collect::<Vec<_>>()) / rn;
        let mut gamma = vec![0.0; nt];
        gamma[1..nt - 1].copy_from_slice(&x);
        return Ok(ModeSolve { gamma, mult: vec![], residual: res, condition: 1.0 });
    }
    // Carrier columns E and constraint rows B (H^1 pairing), both normalized.
    let mut e_cols = Vec::with_capacity(m);
    let mut e_scale = Vec::with_capacity(m);
    let mut b_rows = Vec::with_capacity(m);
    for c in conds {
        let col = c.carrier[1..nt - 1].to_vec();
        let s = norm2(&col);
        e_cols.push(col.iter().map(|v| v / s).collect::<Vec<_>>());
        e_scale.push(s);
        let row = grid.apply_stiffness(j, &c.constraint)[1..nt - 1].to_vec();
        let s = norm2(&row);
        b_rows.push(row.iter().map(|v| v / s).collect::<Vec<_>>());
    }
    let y: Vec<Vec<f64>> = e_cols.iter().map(|c| lu.solve(c)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let s = DMatrix::from_fn(m, m, |a, b| dot(&b_rows[a], &y[b]));
    let sv = s.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { mode: j, estimate: condition });
    }
    let s_lu = s.lu();
    let solve = |r: &[f64], z: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let x = lu.solve(r);
        let bx = DVector::from_fn(m, |a, _| dot(&b_rows[a], &x) - z[a]);
        let lam = s_lu.solve(&bx).expect("checked conditioning");
        let mut g = x;
        for (b, yb) in y.iter().enumerate() {
            for (gi, yi) in g.iter_mut().zip(yb) {
                *gi -= lam[b] * yi;
            }
        }
        (g, lam.iter().cloned().collect())
    };
    let residuals = |g: &[f64], lam: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut kg = vec![0.0; n];
        k.matvec(g, &mut kg);
        let mut rr: Vec<f64> = r.iter().zip(&kg).map(|(a, b)| a - b).collect();
        for (b, col) in e_cols.iter().enumerate() {
            for (ri, ci) in rr.iter_mut().zip(col) {
                *ri -= lam[b] * ci;
            }
        }
        let zz: Vec<f64> = b_rows.iter().map(|row| -dot(row, g)).collect();
        (rr, zz)
    };
    let (mut g, mut lam) = solve(&r, &vec![0.0; m]);
    let mut res = f64::INFINITY;
    for _ in 0..6 {
        let (rr, zz) = residuals(&g, &lam);
        let gn = norm2(&g).max(f64::MIN_POSITIVE);
        res = (norm2(&rr) / rn).max(norm2(&zz) / gn);
        if res < 1e-14 {
            break;
        }
        let (dg, dl) = solve(&rr, &zz);
        for (a, b) in g.iter_mut().zip(&dg) {
            *a += b;
        }
        for (a, b) in lam.iter_mut().zip(&dl) {
            *a += b;
        }
    }
    let mut gamma = vec![0.0; nt];
    gamma[1..nt - 1].copy_from_slice(&g);
    let mult = lam.iter().zip(&e_scale).map(|(l, s)| l / s).collect();
    Ok(ModeSolve { gamma, mult, residual: res, condition })
}

/// Solves `L gamma = rhs - sum mult * carrier` subject to the orthogonality
/// conditions of `constraints`, where `L` is linearized around `specs`.
pub fn solve_constrained(
    specs: &[BubbleSpec],
    rhs: &Field,
    constraints: &ConstraintSet,
) -> Result<(Field, MultiplierSet)> {
    let grid = rhs.grid();
    let pot = potential(grid, specs);
    solve_with_potential(grid, &pot, rhs, constraints)
}

/// [`solve_constrained`] with an explicit potential `V(t)` in place of
/// `p U^{p-1}`.
pub fn solve_with_potential(
    grid: &Arc<Grid>,
    pot: &[f64],
    rhs: &Field,
    constraints: &ConstraintSet,
) -> Result<(Field, MultiplierSet)> {
    let conds = conditions(grid, constraints);
    let per_mode = exec::map_range(grid.n_modes(), |j| {
        let mine: Vec<&Condition> = conds.iter().filter(|c| c.mode == j).collect();
        bordered_mode(grid, j, pot, rhs.mode(j), &mine)
    });
    let nb = constraints.centers.len();
    let mut ms = MultiplierSet { c: vec![0.0; nb], sigma: vec![0.0; nb], psi: vec![0.0; nb], residual: 0.0, condition: 1.0 };
    let mut modes = Vec::with_capacity(grid.n_modes());
    for (j, sol) in per_mode.into_iter().enumerate() {
        let sol = sol?;
        let mine: Vec<&Condition> = conds.iter().filter(|c| c.mode == j).collect();
        for (c, v) in mine.iter().zip(&sol.mult) {
            match c.kind {
                Kind::Trivial => ms.c[c.bubble] = *v,
                Kind::Nontrivial => ms.sigma[c.bubble] = *v,
                Kind::Bubble => ms.psi[c.bubble] = *v,
            }
        }
        ms.residual = ms.residual.max(sol.residual);
        ms.condition = ms.condition.max(sol.condition);
        modes.push(sol.gamma);
    }
    Ok((Field::from_modes(grid, modes)?, ms))
}

/// Carrier fields `(trivial, nontrivial)` of one bubble, for checking
/// `L gamma = rhs - sum mult * carrier` from outside.
pub fn carriers(grid: &Arc<Grid>, center: f64) -> (Field, Field) {
    let params = *grid.params();
    let p = params.p;
    let psi = |t: f64| bubbles::psi(&params, t - center);
    let triv = grid.sample(|t| psi(t).powf(p - 1.0) * bubbles::dpsi(&params, t - center));
    let non = grid.sample(|t| psi(t).powf(p - 1.0) * bubbles::kernel_radial(&params, t - center));
    (Field::single_mode(grid, 0, triv), Field::single_mode(grid, 1, non))
}

/// Cross part `U^p - sum (alpha_j Psi_j)^p` of the first error term.
pub fn build_r1_ex(grid: &Arc<Grid>, specs: &[BubbleSpec]) -> Result<Field> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("build_r1_ex needs at least one bubble".into()));
    }
    let params = *grid.params();
    let p = params.p;
    let prof = grid.sample(|t| {
        let terms: Vec<f64> = specs.iter().map(|b| b.alpha * bubbles::psi(&params, t - b.center)).collect();
        if terms.len() < 2 {
            0.0
        } else {
            power_excess(p, &terms)
        }
    });
    Ok(Field::single_mode(grid, 0, prof))
}

/// Second error term `p sum_j (U^{p-1} - (alpha_j Psi_j)^{p-1}
/// + (alpha_j^{p-1} - 1) Psi_j^{p-1}) beta_j w_{j,d}`.
pub fn build_r2(grid: &Arc<Grid>, specs: &[BubbleSpec], betas: &[f64]) -> Result<Field> {
    if specs.len() != betas.len() {
        return Err(Error::InvalidParameter(format!("{} bubbles but {} betas", specs.len(), betas.len())));
    }
    if grid.max_mode() < 1 {
        return Err(Error::InvalidParameter("build_r2 needs max_mode >= 1".into()));
    }
    let params = *grid.params();
    let p = params.p;
    let prof = grid.sample(|t| {
        let terms: Vec<f64> = specs.iter().map(|b| b.alpha * bubbles::psi(&params, t - b.center)).collect();
        let total: f64 = terms.iter().sum();
        let mut acc = 0.0;
        for (j, b) in specs.iter().enumerate() {
            if betas[j] == 0.0 {
                continue;
            }
            let psi_j = bubbles::psi(&params, t - b.center);
            let factor = power_difference(p - 1.0, terms[j], total - terms[j])
                + (b.alpha.powf(p - 1.0) - 1.0) * psi_j.powf(p - 1.0);
            acc += factor * betas[j] * bubbles::kernel_radial(&params, t - b.center);
        }
        p * acc
    });
    Ok(Field::single_mode(grid, 1, prof))
}
