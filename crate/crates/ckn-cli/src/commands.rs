use std::collections::BTreeMap;

use ckn_lab::bubbles::{self, BubbleSpec};
use ckn_lab::calculus;
use ckn_lab::decompose;
use ckn_lab::exec::{self, Parallelism};
use ckn_lab::linops;
use ckn_lab::stability_lab::{self as lab, Column, Regime, Resolution, SweepRecord};
use ckn_lab::FsParameters;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig, SweepPlan};
use crate::error::{CliError, CliResult};
use crate::io;

pub const SWEEP_HEADER: [&str; 13] =
    ["beta", "R", "q_r", "f_dual", "dist", "nu_ok", "regime", "alpha1", "alpha2", "s1", "s2", "beta1", "beta2"];

/// Applies `--threads`.
pub fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    match threads {
        None => {}
        Some(1) => exec::set_policy(Parallelism::Sequential),
        Some(n) => {
            exec::set_policy(Parallelism::Rayon);
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
            #[cfg(not(feature = "parallel"))]
            let _ = n;
        }
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> CliResult<String> {
    configure_threads(cfg.threads)?;
    match &cfg.experiment {
        Experiment::Bubble { params } => bubble(cfg, *params),
        Experiment::Decompose { field, nu } => decompose_file(cfg, field, *nu),
        Experiment::Sweep { params, plan } => sweep(cfg, *params, plan),
    }
}

fn bubble(cfg: &RunConfig, params: FsParameters) -> CliResult<String> {
    let grid = cfg.resolution.grid(params, &[0.0])?;
    let psi = bubbles::psi_profile(&grid, 0.0);
    let dpsi = bubbles::dpsi_profile(&grid, 0.0);
    let w = bubbles::kernel_profile(&grid, 0.0, params.d)?;
    let specs = [BubbleSpec::unit(0.0)];
    let norm = calculus::norm(&psi);
    let nullity = |k: &ckn_lab::Field| calculus::dual_norm(&linops::apply_l(&specs, k)) / calculus::norm(k);
    let pairs = [(&psi, &dpsi), (&psi, &w), (&dpsi, &w)];
    let ortho = pairs.iter().fold(0.0f64, |m, (a, b)| {
        let h1 = calculus::h1_inner(a, b).unwrap_or(f64::NAN) / (calculus::norm(a) * calculus::norm(b));
        let l2 = calculus::l2_inner(a, b).unwrap_or(f64::NAN) / (calculus::l2_norm(a) * calculus::l2_norm(b));
        m.max(h1.abs()).max(l2.abs())
    });
    let path = cfg.out_dir.join("psi.json");
    io::write_field(&path, &psi)?;
    let s_inv = calculus::sobolev_constant(&grid);
    let out = json!({
        "d": params.d,
        "p": params.p,
        "a": params.a,
        "b": params.b,
        "a_c": params.a_c,
        "lambda_fs": params.lambda_fs,
        "s_inv": s_inv,
        "s_inv_quadrature": calculus::sobolev_constant_quadrature(&grid),
        "psi_norm2": norm * norm,
        "bubble_energy": calculus::bubble_energy(&grid),
        "residual_dual_relative": calculus::dual_norm(&calculus::residual(&psi)) / norm,
        "dpsi_nullity": nullity(&dpsi),
        "w_nullity": nullity(&w),
        "orthogonality_max": ortho,
        "grid": grid_json(&cfg.resolution, &grid),
        "seed": cfg.seed,
        "field_file": path.display().to_string(),
    });
    Ok(io::to_json(&out))
}

fn grid_json(res: &Resolution, grid: &ckn_lab::Grid) -> Value {
    json!({
        "t_min": grid.t_min(),
        "t_max": grid.t_max(),
        "n_t": grid.n_t(),
        "max_mode": grid.max_mode(),
        "n_phi": grid.n_phi(),
        "pad": res.pad,
        "tail_bound": grid.tail_bound(),
    })
}

#[derive(Serialize)]
struct DecomposeReport<'a> {
    field_file: String,
    nu: usize,
    seed: u64,
    orthogonality_ok: bool,
    multi_start_distances: &'a [Option<f64>],
    #[serde(flatten)]
    result: &'a decompose::DecompositionResult,
}

fn decompose_file(cfg: &RunConfig, field: &std::path::Path, nu: Option<usize>) -> CliResult<String> {
    let v = io::read_field(field)?;
    let nu = match nu {
        Some(n) => n,
        None => calculus::bubble_count(&v).count().ok_or_else(|| {
            CliError::Config("the field is outside every energy window; pass --nu".into())
        })?,
    };
    let md = decompose::manifold_distance(&v, nu, cfg.seed)?;
    let dec = decompose::decompose_from(&v, nu, Some(&md.specs))?;
    let ok = dec.orthogonality_ok();
    let report = DecomposeReport {
        field_file: field.display().to_string(),
        nu,
        seed: cfg.seed,
        orthogonality_ok: ok,
        multi_start_distances: &md.starts,
        result: &dec,
    };
    let text = io::to_json(&report);
    io::write_text(&cfg.out_dir.join("decomposition.json"), &text)?;
    io::write_field(&cfg.out_dir.join("rho_star.json"), &dec.rho_star)?;
    if !ok {
        return Err(CliError::Numerical(format!(
            "orthogonality residuals above {:e}: {:?}",
            decompose::ORTHO_TOL,
            dec.ortho_residuals
        )));
    }
    Ok(text)
}

pub fn csv_row(r: &SweepRecord) -> Vec<String> {
    let f = io::fmt_f64;
    vec![
        f(r.beta),
        f(r.r),
        f(r.q_r),
        f(r.f_dual),
        f(r.dist),
        r.nu_ok.to_string(),
        r.regime.to_string(),
        f(r.alpha1),
        f(r.alpha2),
        f(r.s1),
        f(r.s2),
        f(r.beta1),
        f(r.beta2),
    ]
}

fn fit_value(records: &[SweepRecord], x: Column, y: Column) -> Value {
    match lab::fit_records(records, x, y) {
        Ok(fit) => serde_json::to_value(fit).expect("plain struct"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn sweep(cfg: &RunConfig, params: FsParameters, plan: &SweepPlan) -> CliResult<String> {
    let records = lab::run_sweep(params, &cfg.resolution, &plan.schedule, cfg.seed)?;
    let failed = records.iter().filter(|r| !r.ok()).count();

    let rows: Vec<Vec<String>> = records.iter().map(csv_row).collect();
    io::write_text(&cfg.out_dir.join("sweep.csv"), &io::csv_string(&SWEEP_HEADER, &rows))?;

    let pairs = [(Column::FDual, Column::Dist), (Column::Beta, Column::FDual), (Column::QR, Column::FDual)];
    let mut fits = BTreeMap::new();
    for (x, y) in pairs {
        let key = format!("{}_vs_{}", y.name(), x.name());
        let mut by = BTreeMap::new();
        by.insert("all".to_string(), fit_value(&records, x, y));
        if (x, y) == (Column::FDual, Column::Dist) {
            for regime in [Regime::KernelDominated, Regime::InteractionDominated, Regime::Mixed] {
                let subset: Vec<SweepRecord> = records.iter().filter(|r| r.regime == regime).cloned().collect();
                by.insert(regime.to_string(), fit_value(&subset, x, y));
            }
        }
        let mut pts: Vec<(f64, f64)> = records.iter().filter(|r| r.ok()).map(|r| (x.get(r), y.get(r))).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        io::write_text(&cfg.out_dir.join(format!("{key}.dat")), &io::loglog_dat(x.name(), y.name(), &pts))?;
        fits.insert(key, by);
    }
    let errors: Vec<Value> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| json!({ "beta": r.beta, "R": r.r, "error": e })))
        .collect();
    let summary = json!({
        "d": params.d,
        "p": params.p,
        "seed": cfg.seed,
        "plan": plan,
        "resolution": cfg.resolution,
        "records": records.len(),
        "failed": failed,
        "errors": errors,
        "fits": fits,
    });
    let text = io::to_json(&summary);
    io::write_text(&cfg.out_dir.join("fit.json"), &text)?;
    if failed == records.len() {
        return Err(CliError::Numerical(format!("all {failed} sweep records failed")));
    }
    Ok(text)
}
