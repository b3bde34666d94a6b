//! The four subcommands. Each writes its files under the output directory
//! and returns the exit code together with a one-line message.

use std::path::{Path, PathBuf};

use plasma_shock::diagnostics::{
    conservation_residuals, convergence_orders, galilean_check, lorentz_divergence_check, FieldMode, ResidualOptions,
    ResidualReport, SyntheticFields,
};
use plasma_shock::jump::{
    classify_rest_point, constants_from_upstream, find_rest_points, strongest_compressive_root, JumpPair, RestPoint,
};
use plasma_shock::layer::{burgers_embedding, burgers_profile, finite_difference_jacobian, GeneralForm, LayerOde, LayerSystem};
use plasma_shock::profile::{find_profile, germain_sweep, Profile, ProfileOptions};
use plasma_shock::state::{
    radiation_pressure, EquationOfState, ModelParams, PlasmaState, INTEGRAL_NAMES, STATE_DIM,
};
use plasma_shock::twofluid::{conduction_current, joule_identity_check, temperature_split, transport_coefficients, SpeciesSpec};
use plasma_shock::ShockError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BurgersConfig, Coefficient, RunConfig, SweepKind, SweepParameter};
use crate::error::CliError;
use crate::output::{write_json, Table, PROFILE_COLUMNS};

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub message: String,
    pub files: Vec<PathBuf>,
}

/// Plasma problem assembled from a configuration.
pub struct Plasma {
    pub sys: LayerSystem,
    pub upstream: PlasmaState,
    pub species: Option<SpeciesSpec>,
}

pub fn build_plasma(cfg: &RunConfig) -> Result<Plasma, CliError> {
    let u = cfg.upstream.as_ref().ok_or_else(|| CliError::Config("this command needs an [upstream] block".into()))?;
    let state = PlasmaState::quiescent(u.u, u.v, u.w, u.b2, u.b3, u.t);
    let d = &cfg.dissipation;
    let mut params = ModelParams {
        b1: u.b1,
        e1: u.e1,
        e2: u.e2,
        e3: u.e3,
        mu_e: u.mu_e,
        eps: u.eps,
        eta: d.eta,
        mu_visc: d.mu_visc,
        kappa: d.kappa,
        a_r: d.a_r,
        d_r: d.d_r,
        phi: u.phi,
        ..ModelParams::default()
    };
    let species = cfg.species.map(|s| s.spec());
    let derived = match &species {
        Some(spec) => {
            let mass_flux = u.rho * (u.u - u.shock_speed);
            let tc = transport_coefficients(spec, u.rho, spec.number_density(u.rho), mass_flux)?;
            let (ge, gi) = spec.gammas();
            params.gamma_e = ge;
            params.gamma_i = gi;
            params.alpha12 = tc.alpha12;
            Some(tc)
        }
        None => None,
    };
    let pick = |c: Coefficient, from: fn(&plasma_shock::twofluid::TransportCoefficients) -> f64| match (c, &derived) {
        (Coefficient::Value(v), _) => v,
        (Coefficient::Derived, Some(tc)) => from(tc),
        (Coefficient::Derived, None) => unreachable!("validated: derived coefficients need species"),
    };
    params.sigma = pick(d.sigma, |t| t.sigma);
    params.chi = pick(d.chi, |t| t.chi_layer);
    params.beta = pick(d.beta, |t| t.beta);
    let eos = cfg.eos.spec();
    let constants = constants_from_upstream(&state, u.rho, u.shock_speed, &params, &eos)?;
    let sys = LayerSystem::new(params, eos, constants)?;
    Ok(Plasma { sys, upstream: state, species })
}

pub fn burgers_pair(b: &BurgersConfig) -> Result<(GeneralForm, JumpPair), CliError> {
    let sys = burgers_embedding(b.u_left, b.u_right, b.viscosity);
    let pair = JumpPair::general(&sys, vec![b.u_left], vec![b.u_right], sys.shock_speed)?;
    Ok((sys, pair))
}

/// Upstream rest point and the strongest compressive downstream root.
pub fn plasma_pair(p: &Plasma, cfg: &RunConfig) -> Result<JumpPair, CliError> {
    let report = find_rest_points(&p.sys, &p.upstream, &cfg.solver.search())?;
    let i = report
        .closest(&p.upstream.to_array())
        .ok_or_else(|| CliError::NoDownstream("the upstream state was not recovered".into()))?;
    let down = strongest_compressive_root(&report, &p.upstream)
        .ok_or_else(|| CliError::NoDownstream(format!("only {} root(s), none compressive", report.roots.len())))?;
    Ok(JumpPair::new(&p.sys, report.roots[i].clone(), down.clone())?)
}

fn path(out: &Path, cfg: &RunConfig, name: &str) -> PathBuf {
    out.join(format!("{}{name}", cfg.outputs.prefix))
}

fn rest_point_json(r: &RestPoint) -> Value {
    json!({
        "state": r.state,
        "residual_norm": r.residual_norm,
        "n_unstable": r.n_unstable,
        "n_stable": r.n_stable,
        "n_center": r.n_center,
        "eigenvalues": r.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
    })
}

fn thermo(sys: &LayerSystem, y: &[f64]) -> (f64, f64, f64) {
    let rho = sys.constants.m / (y[0] - sys.constants.shock_speed);
    let p = sys.eos.pressure(rho, y[7]);
    (rho, p, p + radiation_pressure(y[7], &sys.params))
}

pub fn cmd_restpoints(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let p = build_plasma(cfg)?;
    let report = find_rest_points(&p.sys, &p.upstream, &cfg.solver.search())?;
    let mut table = Table::new(&[
        "index", "u", "v", "w", "B2", "B3", "zeta2", "zeta3", "T", "rho", "p", "p_t", "n_unstable", "n_stable", "n_center",
        "residual_norm",
    ]);
    for (k, r) in report.roots.iter().enumerate() {
        let (rho, pr, pt) = thermo(&p.sys, &r.state);
        let mut row = vec![k as f64];
        row.extend_from_slice(&r.state);
        row.extend([rho, pr, pt, r.n_unstable as f64, r.n_stable as f64, r.n_center as f64, r.residual_norm]);
        table.push(row);
    }
    let up_index = report.closest(&p.upstream.to_array());
    let down = strongest_compressive_root(&report, &p.upstream);
    let down_index = down.and_then(|d| report.roots.iter().position(|r| r == d));
    let ratios = match (up_index, down) {
        (Some(i), Some(d)) => {
            let (r0, p0, _) = thermo(&p.sys, &report.roots[i].state);
            let (r1, p1, _) = thermo(&p.sys, &d.state);
            Some((r1 / r0, p1 / p0))
        }
        _ => None,
    };
    let summary = json!({
        "roots": report.roots.iter().map(rest_point_json).collect::<Vec<_>>(),
        "upstream_index": up_index,
        "downstream_index": down_index,
        "density_ratio": ratios.map(|r| r.0),
        "pressure_ratio": ratios.map(|r| r.1),
        "seeds": report.seeds,
        "failed_seeds": report.failed_seeds,
    });
    let files = vec![path(out, cfg, "restpoints.csv"), path(out, cfg, "restpoints.json")];
    table.write(&files[0])?;
    write_json(&files[1], &summary)?;
    let n = report.roots.len();
    let (code, message) = if n >= 2 {
        (0, format!("{n} rest points"))
    } else {
        (3, format!("{n} rest point(s): no downstream state"))
    };
    Ok(Outcome { code, message, files })
}

#[derive(Serialize)]
struct ResidualSummary {
    names: [&'static str; 5],
    per_constant: [f64; 5],
    constants_mismatch: [f64; 5],
    worst: f64,
    tol: f64,
    samples: usize,
    pass: bool,
}

impl ResidualSummary {
    fn new(r: &ResidualReport) -> Self {
        Self {
            names: INTEGRAL_NAMES,
            per_constant: r.per_constant,
            constants_mismatch: r.constants_mismatch,
            worst: r.worst(),
            tol: r.tol,
            samples: r.per_sample.len(),
            pass: r.pass,
        }
    }
}

fn profile_json(prof: &Profile, rows: usize) -> Value {
    json!({
        "mismatch": prof.mismatch,
        "width": prof.width,
        "defect": prof.defect,
        "launch_side": prof.launch_side,
        "coefficients": prof.coefficients,
        "samples": prof.samples.len(),
        "rows": rows,
        "x_range": [prof.x_range().0, prof.x_range().1],
        "upstream": rest_point_json(&prof.upstream),
        "downstream": rest_point_json(&prof.downstream),
    })
}

fn rows_of(prof: &Profile, cfg: &RunConfig) -> Vec<(f64, Vec<f64>)> {
    match cfg.outputs.samples {
        Some(n) => prof.resample(n),
        None => prof.samples.iter().map(|s| (s.x, s.y.clone())).collect(),
    }
}

fn worst_defect<S: LayerOde + ?Sized>(sys: &S, y: &[f64]) -> f64 {
    let mut f = vec![0.0; y.len()];
    match sys.rhs(y, &mut f) {
        Ok(()) => sys.integral_defects(y, &f).into_iter().fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    }
}

/// Sample table of a plasma profile in the fixed column order.
pub fn profile_table(p: &Plasma, prof: &Profile, cfg: &RunConfig) -> Result<Table, CliError> {
    let sys = &p.sys;
    let rows = rows_of(prof, cfg);
    let (t_e, t_i) = match &p.species {
        Some(spec) if rows.len() >= 2 => {
            let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let t: Vec<f64> = rows.iter().map(|r| r.1[7]).collect();
            let rel: Vec<f64> = rows.iter().map(|r| r.1[0] - sys.constants.shock_speed).collect();
            temperature_split(&x, &t, &rel, spec, sys.constants.m)?
        }
        _ => {
            let t: Vec<f64> = rows.iter().map(|r| r.1[7]).collect();
            (t.clone(), t)
        }
    };
    let mut table = Table::new(&PROFILE_COLUMNS);
    for (k, (x, y)) in rows.iter().enumerate() {
        let s = PlasmaState::from_slice(y)?;
        let (rho, pr, pt) = thermo(sys, y);
        let j = conduction_current(&s, &sys.constants, &sys.params);
        let mut row = Vec::with_capacity(PROFILE_COLUMNS.len());
        row.push(*x);
        row.extend_from_slice(y);
        row.extend([rho, pr, pt, t_e[k], t_i[k], j[1], j[2], worst_defect(sys, y)]);
        if row.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Numeric(format!("non-finite output row at x = {x}")));
        }
        table.push(row);
    }
    Ok(table)
}

fn no_connection(out: &Path, cfg: &RunConfig, e: ShockError) -> Result<Outcome, CliError> {
    let best = match &e {
        ShockError::NoConnection { best_mismatch, .. } => Some(*best_mismatch),
        _ => None,
    };
    let file = path(out, cfg, "summary.json");
    write_json(&file, &json!({ "status": "no_connection", "best_mismatch": best, "error": e.to_string() }))?;
    Ok(Outcome { code: 4, message: e.to_string(), files: vec![file] })
}

pub fn cmd_profile(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let opts = cfg.solver.profile_options();
    if let Some(b) = &cfg.burgers {
        let (sys, pair) = burgers_pair(b)?;
        let prof = match find_profile(&sys, &pair, &opts) {
            Ok(p) => p,
            Err(e @ (ShockError::NoConnection { .. } | ShockError::NoUnstableDirection)) => return no_connection(out, cfg, e),
            Err(e) => return Err(e.into()),
        };
        let mut table = Table::new(&["x", "u", "residual_worst"]);
        for (x, y) in rows_of(&prof, cfg) {
            table.push(vec![x, y[0], worst_defect(&sys, &y)]);
        }
        let files = vec![path(out, cfg, "profile.csv"), path(out, cfg, "summary.json")];
        table.write(&files[0])?;
        write_json(&files[1], &json!({ "status": "ok", "profile": profile_json(&prof, table.rows.len()) }))?;
        return Ok(Outcome { code: 0, message: format!("width {:.6e}", prof.width), files });
    }
    let p = build_plasma(cfg)?;
    let pair = plasma_pair(&p, cfg)?;
    let prof = match find_profile(&p.sys, &pair, &opts) {
        Ok(prof) => prof,
        Err(e @ (ShockError::NoConnection { .. } | ShockError::NoUnstableDirection)) => return no_connection(out, cfg, e),
        Err(e) => return Err(e.into()),
    };
    let table = profile_table(&p, &prof, cfg)?;
    let report = conservation_residuals(
        &prof,
        &p.sys,
        &ResidualOptions { samples: cfg.solver.residual_samples, tol: cfg.solver.residual_tol },
    )?;
    let status = if report.pass { "ok" } else { "residual_check_failed" };
    let files = vec![path(out, cfg, "profile.csv"), path(out, cfg, "summary.json")];
    table.write(&files[0])?;
    write_json(
        &files[1],
        &json!({
            "status": status,
            "profile": profile_json(&prof, table.rows.len()),
            "residuals": ResidualSummary::new(&report),
        }),
    )?;
    let code = if report.pass { 0 } else { 2 };
    Ok(Outcome {
        code,
        message: format!("mismatch {:.3e}, width {:.6e}, worst residual {:.3e}", prof.mismatch, prof.width, report.worst()),
        files,
    })
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("the sweep command needs a [sweep] block".into()))?;
    let opts = cfg.solver.profile_options();
    match sweep.kind {
        SweepKind::Germain => {
            let report = match &cfg.burgers {
                Some(b) => {
                    let (sys, pair) = burgers_pair(b)?;
                    germain_sweep(&sys, &pair, &sweep.multipliers, &opts)?
                }
                None => {
                    let p = build_plasma(cfg)?;
                    let pair = plasma_pair(&p, cfg)?;
                    germain_sweep(&p.sys, &pair, &sweep.multipliers, &opts)?
                }
            };
            let mut table = Table::new(&["multiplier", "width", "relative_width", "sup_distance", "mismatch", "broken"]);
            let w0 = report.entries.first().map(|e| e.width).unwrap_or(f64::NAN);
            for e in &report.entries {
                table.push(vec![e.multiplier, e.width, e.width / w0, e.sup_distance, e.mismatch, 0.0]);
            }
            if let Some(t) = report.break_at {
                table.push(vec![t, f64::NAN, f64::NAN, f64::NAN, f64::NAN, 1.0]);
            }
            let verdict = match report.break_at {
                Some(t) => format!("break at multiplier {t:e}"),
                None if report.stable => "germain-stable".to_string(),
                None => "germain-unstable".to_string(),
            };
            let files = vec![path(out, cfg, "sweep.csv"), path(out, cfg, "sweep.json")];
            table.write(&files[0])?;
            write_json(
                &files[1],
                &json!({
                    "kind": "germain",
                    "verdict": verdict,
                    "stable": report.stable,
                    "break_at": report.break_at,
                    "neighborhood": report.neighborhood,
                    "multipliers": report.entries.iter().map(|e| e.multiplier).collect::<Vec<_>>(),
                    "widths": report.entries.iter().map(|e| e.width).collect::<Vec<_>>(),
                    "sup_distances": report.entries.iter().map(|e| e.sup_distance).collect::<Vec<_>>(),
                }),
            )?;
            let code = if report.break_at.is_some() { 2 } else { 0 };
            Ok(Outcome { code, message: verdict, files })
        }
        SweepKind::Parameter => parameter_sweep(cfg, out, &opts),
    }
}

fn set_parameter(params: &mut ModelParams, which: SweepParameter, v: f64) {
    match which {
        SweepParameter::Eta => params.eta = v,
        SweepParameter::MuVisc => params.mu_visc = v,
        SweepParameter::Kappa => params.kappa = v,
        SweepParameter::Sigma => params.sigma = v,
        SweepParameter::Beta => params.beta = v,
        SweepParameter::Chi => params.chi = v,
    }
}

/// Natural continuation in one coefficient, each profile warm-started from
/// the previous one. Stops at the first value without a profile.
fn parameter_sweep(cfg: &RunConfig, out: &Path, opts: &ProfileOptions) -> Result<Outcome, CliError> {
    let sweep = cfg.sweep.as_ref().expect("checked by caller");
    let which = sweep.parameter.expect("validated");
    let base = build_plasma(cfg)?;
    let pair = plasma_pair(&base, cfg)?;
    let up = pair.upstream.plasma_state()?;
    let down = pair.downstream.plasma_state()?;
    let mut table = Table::new(&["value", "width", "mismatch", "broken"]);
    let mut previous: Option<Profile> = None;
    let mut break_at = None;
    for &v in &sweep.values {
        let mut params = base.sys.params.clone();
        set_parameter(&mut params, which, v);
        let attempt = (|| -> Result<Profile, ShockError> {
            let sys = LayerSystem::new(params, base.sys.eos.clone(), base.sys.constants)?;
            let pair = JumpPair::new(&sys, classify_rest_point(&up, &sys)?, classify_rest_point(&down, &sys)?)?;
            let mut o = opts.clone();
            if let Some(prev) = &previous {
                o.warm_start = Some(prev.coefficients.clone());
                o.initial_guess = Some(prev.samples.clone());
            }
            find_profile(&sys, &pair, &o)
        })();
        match attempt {
            Ok(prof) => {
                table.push(vec![v, prof.width, prof.mismatch, 0.0]);
                previous = Some(prof);
            }
            Err(_) => {
                table.push(vec![v, f64::NAN, f64::NAN, 1.0]);
                break_at = Some(v);
                break;
            }
        }
    }
    let verdict = match break_at {
        Some(v) => format!("break at value {v:e}"),
        None => "continuation complete".to_string(),
    };
    let files = vec![path(out, cfg, "sweep.csv"), path(out, cfg, "sweep.json")];
    table.write(&files[0])?;
    write_json(&files[1], &json!({ "kind": "parameter", "verdict": verdict, "break_at": break_at }))?;
    Ok(Outcome { code: if break_at.is_some() { 2 } else { 0 }, message: verdict, files })
}

#[derive(Serialize)]
struct CheckEntry {
    name: &'static str,
    value: f64,
    threshold: f64,
    pass: bool,
}

fn entry(name: &'static str, value: f64, threshold: f64) -> CheckEntry {
    CheckEntry { name, value, threshold, pass: value <= threshold }
}

/// Largest row-relative difference between the analytic and the
/// finite-difference Jacobian over random states between the two ends of
/// the shock, with random currents.
pub fn jacobian_check(sys: &LayerSystem, pair: &JumpPair, samples: usize, seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (&pair.upstream.state, &pair.downstream.state);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let theta: f64 = rng.random();
        let mut y: Vec<f64> = (0..STATE_DIM).map(|i| a[i] + theta * (b[i] - a[i])).collect();
        let mag = a[0].abs().max(1.0);
        for c in [5, 6] {
            y[c] += 0.1 * mag * (2.0 * rng.random::<f64>() - 1.0);
        }
        for c in [1, 2, 3, 4] {
            y[c] += 0.05 * mag * (2.0 * rng.random::<f64>() - 1.0);
        }
        let s = PlasmaState::from_slice(&y)?;
        let exact = sys.analytic_jacobian(&s)?;
        let approx = finite_difference_jacobian(sys, &y)?;
        for i in 0..STATE_DIM {
            let scale = (0..STATE_DIM).map(|j| approx[(i, j)].abs()).fold(f64::MIN_POSITIVE, f64::max);
            for j in 0..STATE_DIM {
                worst = worst.max((exact[(i, j)] - approx[(i, j)]).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// Worst relative gap in `i·(E + u×B) = |i|²/σ` over random fields with
/// `i = σ (E + u×B)`.
pub fn joule_check(sigma: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v3 = |r: &mut ChaCha8Rng| [0; 3].map(|_| 2.0 * r.random::<f64>() - 1.0);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (e, u, b) = (v3(&mut rng), v3(&mut rng), v3(&mut rng));
        let uxb = [u[1] * b[2] - u[2] * b[1], u[2] * b[0] - u[0] * b[2], u[0] * b[1] - u[1] * b[0]];
        let current = [0, 1, 2].map(|k| sigma * (e[k] + uxb[k]));
        let (lhs, rhs) = joule_identity_check(current, e, u, b, sigma);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
    }
    worst
}

/// Measured convergence orders of the field identities over h = 1/64, 1/128, 1/256.
pub fn identity_orders(params: &ModelParams) -> Vec<f64> {
    use std::f64::consts::PI;
    let fields = SyntheticFields {
        b1: 0.8,
        e1: 0.1,
        modes: vec![
            FieldMode { k: 2.0 * PI, omega: 1.1, phase: 0.3, a2: 0.5, a3: -0.3, phi: 0.2 },
            FieldMode { k: 4.0 * PI, omega: -0.6, phase: 1.7, a2: -0.2, a3: 0.15, phi: 0.1 },
            FieldMode { k: 6.0 * PI, omega: 0.4, phase: 2.9, a2: 0.05, a3: 0.08, phi: -0.05 },
        ],
    };
    let errors: Vec<f64> = [64.0, 128.0, 256.0]
        .iter()
        .map(|n| lorentz_divergence_check(&fields, params, 1.0 / n, 0.25).max())
        .collect();
    convergence_orders(&errors)
}

pub fn cmd_check(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let opts = cfg.solver.profile_options();
    let seed = cfg.solver.seed;
    let mut checks = Vec::new();
    if let Some(b) = &cfg.burgers {
        let (sys, pair) = burgers_pair(b)?;
        let prof = find_profile(&sys, &pair, &opts)?;
        let mut worst = 0.0f64;
        for s in &prof.samples {
            worst = worst.max((s.y[0] - burgers_profile(b.u_left, b.u_right, b.viscosity, s.x)).abs());
        }
        checks.push(entry("burgers_closed_form", worst, 1e-6));
    } else {
        let p = build_plasma(cfg)?;
        let pair = plasma_pair(&p, cfg)?;
        checks.push(entry("jacobian", jacobian_check(&p.sys, &pair, 100, seed)?, 1e-6));
        let prof = find_profile(&p.sys, &pair, &opts)?;
        let report = conservation_residuals(
            &prof,
            &p.sys,
            &ResidualOptions { samples: cfg.solver.residual_samples, tol: cfg.solver.residual_tol },
        )?;
        checks.push(entry("conservation", report.worst().max(report.constants_mismatch.iter().fold(0.0, |a, b| a.max(*b))), cfg.solver.residual_tol));
        let search = cfg.solver.search();
        let axial = galilean_check(&p.sys, &p.upstream, [0.3, 0.0, 0.0], &search, &opts)?;
        checks.push(entry("galilean_axial", axial.discrepancy, 1e-6));
        if p.sys.params.b1 != 0.0 {
            let transverse = galilean_check(&p.sys, &p.upstream, [0.0, 0.3, 0.0], &search, &opts)?;
            checks.push(entry("galilean_transverse", transverse.discrepancy, 1e-6));
        }
        let mut chi_free = p.sys.params.clone();
        chi_free.chi = 0.0;
        checks.push(entry("joule_identity", joule_check(chi_free.sigma, 1000, seed), 1e-12));
        if p.species.is_some() {
            let table = profile_table(&p, &prof, cfg)?;
            let (t, te, ti) = (table.column("T").unwrap(), table.column("T_e").unwrap(), table.column("T_i").unwrap());
            let gap = (0..t.len()).map(|k| (0.5 * (te[k] + ti[k]) - t[k]).abs() / t[k]).fold(0.0, f64::max);
            checks.push(entry("temperature_mean", gap, 1e-12));
        }
        let orders = identity_orders(&p.sys.params);
        let off = orders.iter().map(|o| (o - 2.0).abs()).fold(0.0, f64::max);
        checks.push(entry("field_identity_order", off, 0.2));
    }
    let pass = checks.iter().all(|c| c.pass);
    let file = path(out, cfg, "check.json");
    write_json(&file, &json!({ "pass": pass, "checks": checks }))?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let message = if pass { format!("{} checks passed", checks.len()) } else { format!("failed: {}", failed.join(", ")) };
    Ok(Outcome { code: if pass { 0 } else { 2 }, message, files: vec![file] })
}
