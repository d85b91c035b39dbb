//! The two-bubble family `v = Psi + Psi_R + beta (w_d + w_{R,d})` with its
//! corrections, sweeps over `(beta, R)`, exponent fits and the regime map.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::bubbles::{self, BubbleSpec};
use crate::calculus;
use crate::cylinder::{from_nodal, to_nodal};
use crate::decompose;
use crate::exec;
use crate::linops::{self, power_difference, power_excess, ConstraintSet, MultiplierSet};
use crate::{Error, Field, FsParameters, Grid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionLevel {
    None,
    /// `rho_{1,1}` and `rho_{1,2}`.
    FirstOrder,
    /// Adds `rho_{2,1}`, `rho_{2,2}` and `rho_{1,1,*}`.
    Full,
}

impl FromStr for CorrectionLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "first" | "first_order" | "first-order" => Ok(Self::FirstOrder),
            "full" => Ok(Self::Full),
            _ => Err(Error::InvalidParameter(format!("unknown correction level '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExampleSpec {
    pub r: f64,
    pub beta: f64,
    pub level: CorrectionLevel,
    pub positive_part: bool,
}

impl ExampleSpec {
    pub fn new(r: f64, beta: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("gap R must be positive, got {r}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be nonnegative, got {beta}")));
        }
        Ok(Self { r, beta, level: CorrectionLevel::Full, positive_part: false })
    }

    pub fn with_level(mut self, level: CorrectionLevel) -> Self {
        self.level = level;
        self
    }

    pub fn with_positive_part(mut self, on: bool) -> Self {
        self.positive_part = on;
        self
    }
}

/// Grid resolution shared by the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Resolution {
    pub n_t: usize,
    pub max_mode: usize,
    /// Defaults to `40 / sqrt(Lambda_FS)`.
    pub pad: Option<f64>,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { n_t: 4097, max_mode: 8, pad: None }
    }
}

impl Resolution {
    pub fn grid(&self, params: FsParameters, centers: &[f64]) -> Result<Arc<Grid>> {
        let pad = self.pad.unwrap_or_else(|| Grid::default_pad(&params));
        Grid::around(params, centers, pad, self.n_t, self.max_mode)
    }
}

/// `exp(-sqrt(Lambda_FS) R)`.
pub fn interaction_q(params: &FsParameters, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!("R must be nonnegative, got {r}")));
    }
    Ok((-params.sqrt_lambda() * r).exp())
}

#[derive(Clone, Debug)]
pub struct XiTerms {
    pub xi11: Field,
    pub xi12: Field,
    pub xi21: Field,
    pub xi22: Field,
}

#[derive(Clone, Copy)]
enum Region {
    Left,
    Right,
    Outside,
}

fn region(t: f64, r: f64) -> Region {
    if t >= -r / 2.0 && t < r / 2.0 {
        Region::Left
    } else if t >= r / 2.0 && t <= 1.5 * r {
        Region::Right
    } else {
        Region::Outside
    }
}

/// Pointwise pieces of the construction at one `t`.
struct Pieces {
    psi0: f64,
    psir: f64,
    w0: f64,
    wr: f64,
}

fn pieces(params: &FsParameters, t: f64, r: f64) -> Pieces {
    Pieces {
        psi0: bubbles::psi(params, t),
        psir: bubbles::psi(params, t - r),
        w0: bubbles::kernel_radial(params, t),
        wr: bubbles::kernel_radial(params, t - r),
    }
}

/// `Xi_{1,1}`, `Xi_{1,2}` (closed form) and `Xi_{2,1}`, `Xi_{2,2}` (nodal,
/// with the split over `[-R/2, R/2)`, `[R/2, 3R/2]` and the rest).
pub fn build_xi_terms(grid: &Arc<Grid>, spec: &ExampleSpec) -> XiTerms {
    let params = *grid.params();
    let (p, r) = (params.p, spec.r);
    let xi11 = grid.sample(|t| {
        let q = pieces(&params, t, r);
        power_excess(p, &[q.psi0, q.psir])
    });
    let xi12 = grid.sample(|t| {
        let q = pieces(&params, t, r);
        p * (power_difference(p - 1.0, q.psi0, q.psir) * q.w0 + power_difference(p - 1.0, q.psir, q.psi0) * q.wr)
    });
    // Radial factors multiplying theta_d^2 and theta_d^3.
    let radial = |t: f64| -> (f64, f64) {
        let q = pieces(&params, t, r);
        match region(t, r) {
            Region::Left => (q.psi0.powf(2.0 * p - 1.0), q.psi0.powf((5.0 * p - 3.0) / 2.0)),
            Region::Right => (q.psir.powf(2.0 * p - 1.0), q.psir.powf((5.0 * p - 3.0) / 2.0)),
            Region::Outside => {
                let g = q.psi0 + q.psir;
                let phi = q.w0 + q.wr;
                (g.powf(p - 2.0) * phi * phi, g.powf(p - 3.0) * phi.powi(3))
            }
        }
    };
    let n_phi = grid.n_phi();
    let x = grid.angular_nodes();
    let mut n21 = vec![0.0; grid.n_t() * n_phi];
    let mut n22 = vec![0.0; grid.n_t() * n_phi];
    for i in 1..grid.n_t() - 1 {
        let (f2, f3) = radial(grid.t(i));
        for k in 0..n_phi {
            n21[i * n_phi + k] = params.a_p * f2 * x[k] * x[k];
            n22[i * n_phi + k] = params.b_p * f3 * x[k].powi(3);
        }
    }
    let nodal = |values| crate::cylinder::Nodal { n_t: grid.n_t(), n_phi, values };
    XiTerms {
        xi11: Field::single_mode(grid, 0, xi11),
        xi12: Field::single_mode(grid, 1, xi12),
        xi21: from_nodal(grid, &nodal(n21)),
        xi22: from_nodal(grid, &nodal(n22)),
    }
}

#[derive(Clone, Debug)]
pub struct Corrections {
    pub rho11: Option<Field>,
    pub rho12: Option<Field>,
    pub rho21: Option<Field>,
    pub rho22: Option<Field>,
    pub rho11_star: Option<Field>,
    pub multipliers: BTreeMap<String, MultiplierSet>,
}

fn centers(spec: &ExampleSpec) -> [f64; 2] {
    [0.0, spec.r]
}

/// The correction solves requested by `spec.level`, each with potential
/// `p Gamma_R^{p-1}` and the four kernel conditions.
pub fn solve_corrections(grid: &Arc<Grid>, spec: &ExampleSpec, xi: &XiTerms) -> Result<Corrections> {
    let mut out = Corrections {
        rho11: None,
        rho12: None,
        rho21: None,
        rho22: None,
        rho11_star: None,
        multipliers: BTreeMap::new(),
    };
    if spec.level == CorrectionLevel::None {
        return Ok(out);
    }
    let c = centers(spec);
    let specs = [BubbleSpec::unit(c[0]), BubbleSpec::unit(c[1])];
    let pot = linops::potential(grid, &specs);
    let cons = ConstraintSet::kernels(&c);
    let solve = |rhs: &Field| linops::solve_with_potential(grid, &pot, rhs, &cons);
    let mut rhs_list: Vec<(&str, &Field)> = vec![("rho11", &xi.xi11), ("rho12", &xi.xi12)];
    if spec.level == CorrectionLevel::Full {
        rhs_list.push(("rho21", &xi.xi21));
        rhs_list.push(("rho22", &xi.xi22));
    }
    let sols = exec::map_slice(&rhs_list, |(_, rhs)| solve(rhs));
    for ((name, _), sol) in rhs_list.iter().zip(sols) {
        let (f, m) = sol?;
        out.multipliers.insert(name.to_string(), m);
        match *name {
            "rho11" => out.rho11 = Some(f),
            "rho12" => out.rho12 = Some(f),
            "rho21" => out.rho21 = Some(f),
            _ => out.rho22 = Some(f),
        }
    }
    if spec.level == CorrectionLevel::Full {
        let rhs = xi11_star(grid, spec, out.rho11.as_ref().expect("solved above"));
        let (f, m) = solve(&rhs)?;
        out.multipliers.insert("rho11_star".into(), m);
        out.rho11_star = Some(f);
    }
    Ok(out)
}

/// `Xi_{1,1,*} = 2 A_p Gamma_R^{p-2} Phi_R rho_{1,1}`.
pub fn xi11_star(grid: &Arc<Grid>, spec: &ExampleSpec, rho11: &Field) -> Field {
    let params = *grid.params();
    let p = params.p;
    let r0 = rho11.mode(0);
    let prof: Vec<f64> = (0..grid.n_t())
        .map(|i| {
            let q = pieces(&params, grid.t(i), spec.r);
            2.0 * params.a_p * (q.psi0 + q.psir).powf(p - 2.0) * (q.w0 + q.wr) * r0[i]
        })
        .collect();
    Field::single_mode(grid, 1, prof)
}

#[derive(Clone, Debug)]
pub struct Example {
    pub spec: ExampleSpec,
    /// `Gamma_R + beta Phi_R`.
    pub v: Field,
    /// `(-d_t^2 - Delta_theta + Lambda_FS) v` in closed form.
    pub v_image: Field,
    /// Total correction.
    pub correction: Field,
    /// `v + correction`.
    pub v_tilde: Field,
    /// Nodal positive part of `v_tilde`, re-projected.
    pub v_plus: Field,
    pub v_minus: Field,
    pub xi: XiTerms,
    pub corrections: Corrections,
}

impl Example {
    /// The field the experiment measures: `v_plus` or `v_tilde`.
    pub fn measured(&self) -> &Field {
        if self.spec.positive_part {
            &self.v_plus
        } else {
            &self.v_tilde
        }
    }

    /// Residual of [`Example::measured`].
    pub fn residual(&self) -> Result<Field> {
        calculus::residual_split(self.measured(), &self.v, &self.v_image)
    }
}

pub fn example_grid(params: FsParameters, spec: &ExampleSpec, res: &Resolution) -> Result<Arc<Grid>> {
    res.grid(params, &centers(spec))
}

pub fn assemble_example(grid: &Arc<Grid>, spec: &ExampleSpec) -> Result<Example> {
    if grid.max_mode() < 1 {
        return Err(Error::InvalidParameter("the example needs max_mode >= 1".into()));
    }
    let params = *grid.params();
    let (p, r, beta) = (params.p, spec.r, spec.beta);
    let gamma = grid.sample(|t| bubbles::psi(&params, t) + bubbles::psi(&params, t - r));
    let phi = grid.sample(|t| bubbles::kernel_radial(&params, t) + bubbles::kernel_radial(&params, t - r));
    let mut v = Field::single_mode(grid, 0, gamma);
    v.mode_mut(1).copy_from_slice(&phi.iter().map(|x| beta * x).collect::<Vec<_>>());
    let img0 = grid.sample(|t| bubbles::psi(&params, t).powf(p) + bubbles::psi(&params, t - r).powf(p));
    let img1 = grid.sample(|t| {
        let q = pieces(&params, t, r);
        p * beta * (q.psi0.powf(p - 1.0) * q.w0 + q.psir.powf(p - 1.0) * q.wr)
    });
    let mut v_image = Field::single_mode(grid, 0, img0);
    v_image.mode_mut(1).copy_from_slice(&img1);

    let xi = build_xi_terms(grid, spec);
    let corrections = solve_corrections(grid, spec, &xi)?;
    let mut correction = Field::zeros(grid);
    let terms: [(&Option<Field>, f64); 5] = [
        (&corrections.rho11, 1.0),
        (&corrections.rho12, beta),
        (&corrections.rho21, beta * beta),
        (&corrections.rho22, beta.powi(3)),
        // Enters at first order in beta alongside rho_{1,2}.
        (&corrections.rho11_star, beta),
    ];
    for (f, c) in terms {
        if let Some(f) = f {
            correction.axpy(c, f);
        }
    }
    let v_tilde = &v + &correction;
    let nodal = to_nodal(&v_tilde);
    let v_plus = from_nodal(grid, &nodal.map(|x| x.max(0.0)));
    let v_minus = from_nodal(grid, &nodal.map(|x| (-x).max(0.0)));
    Ok(Example { spec: *spec, v, v_image, correction, v_tilde, v_plus, v_minus, xi, corrections })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    KernelDominated,
    InteractionDominated,
    Mixed,
    Failed,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::KernelDominated => "kernel_dominated",
            Regime::InteractionDominated => "interaction_dominated",
            Regime::Mixed => "mixed",
            Regime::Failed => "failed",
        })
    }
}

/// Kernel-dominated when `Q <= beta^3 / 10`, interaction-dominated when
/// `beta <= Q^{min(p,2)/2} / 10`, mixed otherwise.
pub fn classify(params: &FsParameters, beta: f64, q: f64) -> Regime {
    if q <= beta.powi(3) / 10.0 {
        Regime::KernelDominated
    } else if beta <= q.powf(params.p.min(2.0) / 2.0) / 10.0 {
        Regime::InteractionDominated
    } else {
        Regime::Mixed
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    pub beta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub q_r: f64,
    pub f_dual: f64,
    /// Distance of the measured field.
    pub dist: f64,
    /// Distance of `v_tilde` itself (equals `dist` unless the positive part is measured).
    pub dist_signed: f64,
    pub nu_ok: bool,
    pub regime: Regime,
    pub alpha1: f64,
    pub alpha2: f64,
    pub s1: f64,
    pub s2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub rho_star_norm: f64,
    pub correction_norm: f64,
    pub negative_part_norm2: f64,
    pub error: Option<String>,
}

impl SweepRecord {
    fn failed(params: &FsParameters, spec: &ExampleSpec, err: &Error) -> Self {
        let nan = f64::NAN;
        Self {
            beta: spec.beta,
            r: spec.r,
            q_r: (-params.sqrt_lambda() * spec.r).exp(),
            f_dual: nan,
            dist: nan,
            dist_signed: nan,
            nu_ok: false,
            regime: Regime::Failed,
            alpha1: nan,
            alpha2: nan,
            s1: nan,
            s2: nan,
            beta1: nan,
            beta2: nan,
            rho_star_norm: nan,
            correction_norm: nan,
            negative_part_norm2: nan,
            error: Some(err.to_string()),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Mixes a base seed with a record index.
pub fn derive_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_record(params: FsParameters, res: &Resolution, spec: &ExampleSpec, seed: u64) -> Result<SweepRecord> {
    let grid = example_grid(params, spec, res)?;
    let ex = assemble_example(&grid, spec)?;
    let f = ex.residual()?;
    let f_dual = calculus::dual_norm(&f);
    let measured = ex.measured();
    let md = decompose::manifold_distance(measured, 2, seed)?;
    let dec = decompose::decompose_from(measured, 2, Some(&md.specs))?;
    let dist_signed = if spec.positive_part {
        decompose::decompose_from(&ex.v_tilde, 2, Some(&md.specs))?.dist
    } else {
        dec.dist
    };
    let q_r = interaction_q(&params, spec.r)?;
    Ok(SweepRecord {
        beta: spec.beta,
        r: spec.r,
        q_r,
        f_dual,
        dist: dec.dist,
        dist_signed,
        nu_ok: dec.nu_in_window,
        regime: classify(&params, spec.beta, q_r),
        alpha1: dec.specs[0].alpha,
        alpha2: dec.specs[1].alpha,
        s1: dec.specs[0].center,
        s2: dec.specs[1].center,
        beta1: dec.betas[0],
        beta2: dec.betas[1],
        rho_star_norm: dec.rho_star_norm,
        correction_norm: calculus::norm(&ex.correction),
        negative_part_norm2: calculus::norm(&ex.v_minus).powi(2),
        error: None,
    })
}

/// Runs every spec; failures are recorded and the sweep continues. Output
/// order follows the schedule.
pub fn run_sweep(params: FsParameters, res: &Resolution, schedule: &[ExampleSpec], seed: u64) -> Result<Vec<SweepRecord>> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty schedule".into()));
    }
    let idx: Vec<usize> = (0..schedule.len()).collect();
    Ok(exec::map_slice(&idx, |&i| {
        let spec = &schedule[i];
        run_record(params, res, spec, derive_seed(seed, i)).unwrap_or_else(|e| SweepRecord::failed(&params, spec, &e))
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub n: usize,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<ExponentFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput("x and y differ in length".into()));
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("log-log fit needs positive finite values".into()));
    }
    let inc = xs.windows(2).all(|w| w[1] > w[0]);
    let dec = xs.windows(2).all(|w| w[1] < w[0]);
    if !(inc || dec) {
        return Err(Error::InvalidInput("x must be strictly monotone".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(ExponentFit { slope, stderr, intercept, n })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Beta,
    R,
    QR,
    FDual,
    Dist,
}

impl Column {
    pub fn get(self, r: &SweepRecord) -> f64 {
        match self {
            Column::Beta => r.beta,
            Column::R => r.r,
            Column::QR => r.q_r,
            Column::FDual => r.f_dual,
            Column::Dist => r.dist,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Column::Beta => "beta",
            Column::R => "R",
            Column::QR => "q_r",
            Column::FDual => "f_dual",
            Column::Dist => "dist",
        }
    }
}

impl FromStr for Column {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(Self::Beta),
            "R" | "r" => Ok(Self::R),
            "q_r" => Ok(Self::QR),
            "f_dual" => Ok(Self::FDual),
            "dist" => Ok(Self::Dist),
            _ => Err(Error::InvalidParameter(format!("unknown column '{s}'"))),
        }
    }
}

/// Exponent fit over the successful records, ordered by `x`.
pub fn fit_records(records: &[SweepRecord], x: Column, y: Column) -> Result<ExponentFit> {
    let mut pts: Vec<(f64, f64)> = records.iter().filter(|r| r.ok()).map(|r| (x.get(r), y.get(r))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit_exponent(&xs, &ys)
}

/// `n` points from `lo` to `hi`, geometric or arithmetic.
pub fn spaced(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                if log {
                    (lo.ln() + s * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + s * (hi - lo)
                }
            })
            .collect(),
    }
}

/// Cartesian schedule, `beta` varying fastest.
pub fn schedule(betas: &[f64], rs: &[f64], level: CorrectionLevel, positive_part: bool) -> Result<Vec<ExampleSpec>> {
    let mut out = Vec::with_capacity(betas.len() * rs.len());
    for &r in rs {
        for &b in betas {
            out.push(ExampleSpec::new(r, b)?.with_level(level).with_positive_part(positive_part));
        }
    }
    Ok(out)
}

/// Named schedules used by the command line and the acceptance run.
pub mod presets {
    use super::*;

    #[derive(Clone, Debug)]
    pub struct Preset {
        pub d: usize,
        pub p: f64,
        pub betas: Vec<f64>,
        pub rs: Vec<f64>,
    }

    impl Preset {
        pub fn params(&self) -> Result<FsParameters> {
            FsParameters::new(self.d, self.p)
        }

        pub fn schedule(&self) -> Result<Vec<ExampleSpec>> {
            schedule(&self.betas, &self.rs, CorrectionLevel::Full, false)
        }
    }

    /// `d = 3`, `p = 2`, six log-spaced `beta` in `[0.02, 0.2]` at `R = 16`,
    /// where `Q_R <= beta^3 / 10` throughout.
    pub fn kernel_dominated() -> Preset {
        Preset { d: 3, p: 2.0, betas: spaced(0.02, 0.2, 6, true), rs: vec![16.0] }
    }

    /// `beta = 0` with gaps in the range where `Q_R` is asymptotic but
    /// `|f|` stays well above roundoff.
    pub fn beta_zero(d: usize, p: f64) -> Preset {
        let rs = if p > 2.0 {
            spaced(16.0, 32.0, 9, false)
        } else if p == 2.0 {
            spaced(12.0, 20.0, 9, false)
        } else {
            spaced(14.0, 20.0, 7, false)
        };
        Preset { d, p, betas: vec![0.0], rs }
    }

    /// Six log-spaced `beta` in `[0.02, 0.2]` by six `R` in `[8, 18]`,
    /// running from mixed into kernel-dominated.
    pub fn law_grid() -> Preset {
        Preset { d: 3, p: 2.0, betas: spaced(0.02, 0.2, 6, true), rs: spaced(8.0, 18.0, 6, false) }
    }

    pub fn by_name(name: &str) -> Result<Preset> {
        match name {
            "kernel" => Ok(kernel_dominated()),
            "beta0-p3" => Ok(beta_zero(2, 3.0)),
            "beta0-p2" => Ok(beta_zero(3, 2.0)),
            "beta0-p1.5" => Ok(beta_zero(3, 1.5)),
            "grid" => Ok(law_grid()),
            _ => Err(Error::InvalidParameter(format!(
                "unknown preset '{name}' (kernel, beta0-p3, beta0-p2, beta0-p1.5, grid)"
            ))),
        }
    }
}
