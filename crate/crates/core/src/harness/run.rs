use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use super::config::{Experiment, ExperimentConfig};
use super::manifest::{write_atomic, RunManifest};
use super::perturbation::{generate_perturbation, PerturbationSpec};
use crate::elliptic::{indicial_roots, lowest_eigenvalue, solve_yamabe, EigenOperator, EigenOptions, IndicialRadius};
use crate::error::{Error, Result};
use crate::flow::{run_flow, Verdict};
use crate::functionals::{
    extrapolate, functional_report, renormalized_volume_at_radius, volume_renormalized_mass, LimitEstimate,
    RADIUS_FRACTIONS,
};
use crate::geometry::{curvature, RadialGrid, WarpedMetric};
use crate::lojasiewicz::{finite_instability_probe, gradient_ascent, reduce, write_lemma_csv, AnalyticFunctional, FunctionalKind};

/// Tolerance of the sign conditions checked by the mass sweep.
pub const MASS_TOL: f64 = 1e-8;
/// Lowest trace-free Einstein eigenvalue accepted as stable.
pub const SPECTRUM_TOL: f64 = 1e-4;
/// Pointwise scal + n(n−1) above which a sample counts as scal-bounded;
/// covers the truncation error of the curvature stencils.
pub const SCAL_BOUND_SLACK: f64 = 1e-6;

/// Result of an experiment before it is written to disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub success: bool,
    pub verdict: String,
    pub diagnostics: serde_json::Value,
    /// Output files in write order.
    pub files: Vec<(String, Vec<u8>)>,
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(value)?)
}

/// The perturbed metric ĝ + h of the configured perturbation.
pub fn initial_metric(config: &ExperimentConfig, spec: &PerturbationSpec) -> Result<WarpedMetric> {
    let grid = config.grid_arc()?;
    let h = generate_perturbation(spec, &grid)?;
    WarpedMetric::hyperbolic(grid).perturbed(&h, 1.0)
}

/// RV(g) = lim RV(g, R).
pub fn renormalized_volume_limit(g: &WarpedMetric, gref: &WarpedMetric) -> Result<LimitEstimate> {
    let radii: Vec<f64> = RADIUS_FRACTIONS.iter().map(|s| s * g.grid.r_max()).collect();
    let values = radii.iter().map(|&r| renormalized_volume_at_radius(g, gref, r)).collect::<Result<Vec<_>>>()?;
    extrapolate("RV", &radii, &values)
}

fn curvature_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let g = initial_metric(config, &config.perturbation)?;
    let c = curvature(&g)?;
    let rows: Vec<Vec<String>> = (0..g.grid.len())
        .map(|k| {
            [g.grid.nodes()[k], g.u[k], g.v[k], c.k_rad[k], c.k_tan[k], c.ric_rr_excess[k], c.ric_tt_excess[k], c.scal_excess[k]]
                .iter()
                .map(|x| x.to_string())
                .collect()
        })
        .collect();
    let sup = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(Outcome {
        success: true,
        verdict: "computed".into(),
        diagnostics: json!({
            "max_abs_scal_excess": sup(&c.scal_excess),
            "max_abs_ric_excess": sup(&c.ric_rr_excess).max(sup(&c.ric_tt_excess)),
        }),
        files: vec![(
            "curvature.csv".into(),
            csv_bytes(&["r", "u", "v", "k_rad", "k_tan", "ric_rr_excess", "ric_tt_excess", "scal_excess"], &rows)?,
        )],
    })
}

fn entropy_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let g = initial_metric(config, &config.perturbation)?;
    let gref = WarpedMetric::hyperbolic(g.grid.clone());
    let report = functional_report(&g, &gref, &config.solver)?;
    let mut radius = Vec::new();
    report.write_radius_csv(&mut radius)?;
    Ok(Outcome {
        success: true,
        verdict: "computed".into(),
        diagnostics: json!({
            "mu": report.mu,
            "m_vr": report.m_vr,
            "s": report.s_value,
            "w": report.w_value,
            "limit_residuals": report.convergence_flags.iter().map(|l| (l.name.clone(), l.residual)).collect::<Vec<_>>(),
        }),
        files: vec![("functionals.json".into(), report.to_json()?.into_bytes()), ("radius.csv".into(), radius)],
    })
}

/// One sample of the mass sweep.
#[derive(Debug, Clone, Serialize)]
pub struct MassSample {
    pub seed: u64,
    /// min(scal + n(n−1)) over the grid.
    pub min_scal_excess: f64,
    pub scal_bounded: bool,
    pub m_vr: f64,
    /// RV of the constant-scalar-curvature conformal metric ḡ.
    pub rv_yamabe: f64,
    pub m_vr_yamabe: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassSweep {
    pub samples: Vec<MassSample>,
    pub checked: usize,
    pub passed: bool,
}

/// m_VR, RV after the Yamabe solve and m_VR(ḡ) ≤ m_VR(g) over consecutive
/// seeds; the sign conditions are checked on scal-bounded samples.
pub fn mass_sweep(config: &ExperimentConfig) -> Result<MassSweep> {
    let mut samples = Vec::new();
    for i in 0..config.mass.seeds {
        let spec = PerturbationSpec { seed: config.perturbation.seed.wrapping_add(i), ..config.perturbation };
        let g = initial_metric(config, &spec)?;
        let gref = WarpedMetric::hyperbolic(g.grid.clone());
        let c = curvature(&g)?;
        let min_scal_excess = c.scal_excess.iter().fold(f64::INFINITY, |m, x| m.min(*x));
        let m_vr = volume_renormalized_mass(&g, &gref)?;
        let (_, gbar) = solve_yamabe(&g, &config.solver)?;
        let rv_yamabe = renormalized_volume_limit(&gbar, &gref)?.value;
        let m_vr_yamabe = volume_renormalized_mass(&gbar, &gref)?;
        let scal_bounded = min_scal_excess >= -SCAL_BOUND_SLACK;
        let passed = !scal_bounded || (m_vr >= -MASS_TOL && rv_yamabe >= -MASS_TOL && m_vr_yamabe <= m_vr + MASS_TOL);
        samples.push(MassSample { seed: spec.seed, min_scal_excess, scal_bounded, m_vr, rv_yamabe, m_vr_yamabe, passed });
    }
    let checked = samples.iter().filter(|s| s.scal_bounded).count();
    let passed = samples.iter().all(|s| s.passed);
    Ok(MassSweep { samples, checked, passed })
}

fn mass_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let sweep = mass_sweep(config)?;
    let rows: Vec<Vec<String>> = sweep
        .samples
        .iter()
        .map(|s| {
            vec![
                s.seed.to_string(),
                s.min_scal_excess.to_string(),
                s.scal_bounded.to_string(),
                s.m_vr.to_string(),
                s.rv_yamabe.to_string(),
                s.m_vr_yamabe.to_string(),
                s.passed.to_string(),
            ]
        })
        .collect();
    let min_m_vr = sweep.samples.iter().fold(f64::INFINITY, |m, s| m.min(s.m_vr));
    Ok(Outcome {
        success: sweep.passed,
        verdict: if sweep.passed { "mass inequalities hold" } else { "mass inequality violated" }.into(),
        diagnostics: json!({ "samples": sweep.samples.len(), "scal_bounded": sweep.checked, "min_m_vr": min_m_vr }),
        files: vec![
            (
                "mass.csv".into(),
                csv_bytes(&["seed", "min_scal_excess", "scal_bounded", "m_vr", "rv_yamabe", "m_vr_yamabe", "passed"], &rows)?,
            ),
            ("functionals.json".into(), json_bytes(&sweep)?),
        ],
    })
}

fn flow_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let g0 = initial_metric(config, &config.perturbation)?;
    let traj = run_flow(&g0, &config.flow)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    let fit = traj.lojasiewicz_fit();
    let rate = traj.rate_fit();
    let summary = json!({
        "verdict": traj.verdict,
        "steps": traj.steps,
        "rejected_steps": traj.rejected_steps,
        "initial": traj.states.first(),
        "final": traj.final_state(),
        "lojasiewicz": fit.as_ref().ok(),
        "lojasiewicz_error": fit.as_ref().err().map(|e| e.to_string()),
        "rate": rate.as_ref().ok(),
        "rate_error": rate.as_ref().err().map(|e| e.to_string()),
    });
    let success = matches!(traj.verdict, Verdict::Converged { .. });
    Ok(Outcome {
        success,
        verdict: format!("{:?}", traj.verdict),
        diagnostics: summary.clone(),
        files: vec![("trajectory.csv".into(), csv), ("functionals.json".into(), json_bytes(&summary)?)],
    })
}

/// Frame-component data (c, i₀) of Δ_E on tangential trace-free tensors at
/// ĝ: −2R̊ = −2 and the connection term 2κ² → 2 of the rough Laplacian.
pub const EINSTEIN_INDICIAL: (f64, f64) = (-2.0, 2.0);

/// Lowest trace-free eigenvalue on nested truncations of the configured
/// grid with the same spacing, ordered by increasing R_max.
pub fn trace_free_sequence(config: &ExperimentConfig, fractions: &[f64], opts: &EigenOptions) -> Result<Vec<(f64, f64)>> {
    let h = config.grid.r_max / config.grid.nodes as f64;
    fractions
        .iter()
        .map(|s| {
            let len = (s * config.grid.nodes as f64).round() as usize;
            let grid = std::sync::Arc::new(RadialGrid::new(config.n, len, len as f64 * h, config.grid.scheme)?);
            let g = WarpedMetric::hyperbolic(grid);
            Ok((g.grid.r_max(), lowest_eigenvalue(EigenOperator::EinsteinTraceFree, &g, opts)?.lambda))
        })
        .collect()
}

fn spectrum_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let g = initial_metric(config, &config.perturbation)?;
    let n = config.n;
    let opts = &config.spectrum.eigen;
    let mut rows = Vec::new();
    let radius = |r: IndicialRadius| match r {
        IndicialRadius::Real(x) => x,
        IndicialRadius::Imaginary(x) => -x,
    };
    for &c in &config.spectrum.scalar_shifts {
        let rep = indicial_roots(n, c, 0, 0.0);
        rows.push(vec!["indicial_radius".into(), "scalar".into(), c.to_string(), radius(rep.radius).to_string(), String::new(), String::new()]);
    }
    let (c_e, i0_e) = EINSTEIN_INDICIAL;
    let rep = indicial_roots(n, c_e, 0, i0_e);
    rows.push(vec!["indicial_radius".into(), "einstein".into(), c_e.to_string(), radius(rep.radius).to_string(), String::new(), String::new()]);
    let mut ops: Vec<(String, f64, EigenOperator)> =
        config.spectrum.scalar_shifts.iter().map(|&c| ("shifted_scalar".to_string(), c, EigenOperator::ShiftedScalar { c })).collect();
    ops.push(("einstein_trace_free".into(), 0.0, EigenOperator::EinsteinTraceFree));
    ops.push(("einstein_pure_trace".into(), 0.0, EigenOperator::EinsteinPureTrace));
    ops.push(("einstein".into(), 0.0, EigenOperator::Einstein));
    let mut lambda_tf = f64::NAN;
    for (name, c, op) in ops {
        let res = lowest_eigenvalue(op, &g, opts)?;
        if op == EigenOperator::EinsteinTraceFree {
            lambda_tf = res.lambda;
        }
        rows.push(vec![
            "lowest_eigenvalue".into(),
            name,
            c.to_string(),
            res.lambda.to_string(),
            res.iterations.to_string(),
            res.residual.to_string(),
        ]);
    }
    let success = lambda_tf >= -SPECTRUM_TOL;
    Ok(Outcome {
        success,
        verdict: if success { "trace-free Einstein spectrum nonnegative" } else { "negative trace-free Einstein mode" }.into(),
        diagnostics: json!({ "lambda_trace_free": lambda_tf, "einstein_indicial_radius": radius(rep.radius) }),
        files: vec![(
            "spectrum.csv".into(),
            csv_bytes(&["quantity", "operator", "c", "value", "iterations", "residual"], &rows)?,
        )],
    })
}

fn loj_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let mut results = Vec::new();
    for &kind in &config.loj.functionals {
        let f = AnalyticFunctional::new(kind, config.loj.dim)?;
        results.push(reduce(&f, &config.loj.reduction)?);
    }
    let theta_ok = results.iter().all(|r| (r.theta - r.theta_closed_form).abs() <= config.loj.theta_tol);
    let lemmas_ok = results.iter().all(|r| r.lemma_checks.iter().all(|c| c.passed));
    // Gradient ascent: polynomial convergence for −|x|⁴ and escape for −x₁² + x₂³.
    let quartic = AnalyticFunctional::new(FunctionalKind::NegQuartic, 2)?;
    let traj = gradient_ascent(&quartic, &DVector::from_vec(vec![0.3, -0.2]), 0.05, 2000.0, 1.0)?;
    let depth: Vec<f64> = traj.values.iter().map(|v| -v).collect();
    let quartic_fit = crate::flow::fits::fit_lojasiewicz(&depth, &traj.grad_sq, 1e-14)?;
    let cubic = AnalyticFunctional::new(FunctionalKind::Cubic, 2)?;
    let (escape, growth) =
        finite_instability_probe(&cubic, &DVector::from_vec(vec![0.0, 0.05]), 1e-3, 0.5, 2.0 / 3.0, 1.0 / 9.0)?;
    let mut csv = Vec::new();
    write_lemma_csv(&results, &mut csv)?;
    let summary = json!({
        "reductions": results,
        "ascent_quartic_theta": quartic_fit.theta,
        "ascent_cubic_escaped": escape.escaped,
        "ascent_cubic_growth": growth,
    });
    let success = theta_ok && lemmas_ok;
    Ok(Outcome {
        success,
        verdict: if success { "exponents and lemma checks pass" } else { "exponent or lemma check failed" }.into(),
        diagnostics: json!({ "theta_ok": theta_ok, "lemmas_ok": lemmas_ok }),
        files: vec![("loj_checks.csv".into(), csv), ("functionals.json".into(), json_bytes(&summary)?)],
    })
}

/// Runs the configured experiment without touching the filesystem.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    match config.experiment {
        Experiment::Curvature => curvature_experiment(config),
        Experiment::Entropy => entropy_experiment(config),
        Experiment::Mass => mass_experiment(config),
        Experiment::Flow => flow_experiment(config),
        Experiment::Spectrum => spectrum_experiment(config),
        Experiment::Loj => loj_experiment(config),
    }
}

/// Runs the experiment, writes its outputs and the manifest to
/// `config.output_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let outcome = execute(config)?;
    let dir: &Path = &config.output_dir;
    let files = outcome.files.iter().map(|(name, bytes)| write_atomic(dir, name, bytes)).collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        config: config.clone(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        success: outcome.success,
        verdict: outcome.verdict,
        diagnostics: outcome.diagnostics,
        files,
    };
    manifest.write(dir)?;
    Ok(manifest)
}

/// Exit code of a failed run: 1 for usage and configuration errors, 2 for
/// numerical verdicts.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid(_) | Error::SpecInvalid(_) | Error::Parse(_) | Error::Io(_) | Error::InvalidGrid(_) => 1,
        _ => 2,
    }
}

