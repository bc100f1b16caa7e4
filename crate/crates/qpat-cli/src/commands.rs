//! The five subcommands: phantom, simulate, reconstruct, sweep, check-g.
//!
//! Every command is a pure function of manifest plus seeds: outputs carry a
//! provenance block (manifest hash, tool version) and are written atomically,
//! so reruns are byte-identical except for the timing section of
//! reconstruction results.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use qpat::diagnostics::{
    default_level_tol, frequency_function, holder_fit, stability_pair, unimodality_check,
    StabilityReport,
};
use qpat::forward::{
    absorbed_energy, make_illuminations, make_phantom, solve_photon_density_with_stats,
    CoefficientSet, IlluminationPair, MeasurementSet,
};
use qpat::grid::field_io::{read_field, read_trace, write_atomic, write_field, write_trace};
use qpat::grid::norms::{boundary_l2_norm, interior_l2_norm};
use qpat::grid::{boundary_mean, Grid, ScalarField};
use qpat::inverse::reconstruct;
use qpat::{Error, Result};

use crate::manifest::{LoadedManifest, Provenance, SweepSpec};

/// Flags shared by all commands, already resolved against the manifest.
pub struct Options {
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub seed_override: Option<u64>,
    pub grid_n: Option<usize>,
    pub quiet: bool,
}

impl Options {
    fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}

fn resolve_grid(lm: &LoadedManifest, opts: &Options) -> Result<Grid> {
    let mut spec = lm.manifest.grid.clone();
    if let Some(n) = opts.grid_n {
        spec.n = n;
    }
    spec.build()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn require_file(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::Parameter(format!(
            "missing input file {}",
            path.display()
        )));
    }
    Ok(())
}

/// Builds the coefficient fields and writes them with their verified bounds.
pub fn cmd_phantom(lm: &LoadedManifest, opts: &Options) -> Result<()> {
    let grid = resolve_grid(lm, opts)?;
    let spec = lm
        .manifest
        .phantom
        .as_ref()
        .ok_or_else(|| Error::Parameter("manifest has no phantom section".into()))?;
    let phantom = make_phantom(grid, spec)?;
    write_field(&opts.out_dir.join("D"), &phantom.d)?;
    write_field(&opts.out_dir.join("sigma"), &phantom.sigma)?;
    let report = json!({
        "provenance": Provenance::new(&lm.sha256),
        "grid": { "dim": grid.dim(), "n": grid.n() },
        "phantom": spec,
        "bounds": phantom.bounds,
    });
    write_json(&opts.out_dir.join("phantom.json"), &report)?;
    opts.say(&format!(
        "phantom: wrote D, sigma ({} nodes), lambda0 = {:.4}, lambda1 = {:.4}",
        grid.num_nodes(),
        phantom.bounds.lambda0,
        phantom.bounds.lambda1
    ));
    Ok(())
}

/// Solves the photon densities and writes the absorbed-energy data, clean
/// and noisy.
pub fn cmd_simulate(lm: &LoadedManifest, opts: &Options) -> Result<()> {
    let grid = resolve_grid(lm, opts)?;
    let d_stem = opts.out_dir.join("D");
    let sigma_stem = opts.out_dir.join("sigma");
    require_file(&d_stem.with_extension("json"))?;
    require_file(&sigma_stem.with_extension("json"))?;
    let d = read_field(&d_stem)?;
    let sigma = read_field(&sigma_stem)?;
    qpat::grid::same_grid(d.grid(), grid)?;
    let phantom = CoefficientSet::new(d, sigma)?;

    let illum_spec = lm
        .manifest
        .illumination
        .as_ref()
        .ok_or_else(|| Error::Parameter("manifest has no illumination section".into()))?;
    let illum = make_illuminations(grid, illum_spec)?;

    let cfg = lm
        .manifest
        .reconstruction
        .clone()
        .unwrap_or_default()
        .solver;
    let (u1, stats1) = solve_photon_density_with_stats(&phantom, &illum.g1, &cfg)?;
    let (u2, stats2) = solve_photon_density_with_stats(&phantom, &illum.g2, &cfg)?;
    let h1 = absorbed_energy(&phantom.sigma, &u1)?;
    let h2 = absorbed_energy(&phantom.sigma, &u2)?;

    write_field(&opts.out_dir.join("u1"), &u1)?;
    write_field(&opts.out_dir.join("u2"), &u2)?;
    write_field(&opts.out_dir.join("H1"), &h1)?;
    write_field(&opts.out_dir.join("H2"), &h2)?;
    write_trace(&opts.out_dir.join("g1.trace.json"), &illum.g1)?;
    write_trace(&opts.out_dir.join("g2.trace.json"), &illum.g2)?;
    write_trace(
        &opts.out_dir.join("D_boundary.trace.json"),
        &phantom.d_boundary(),
    )?;
    write_json(
        &opts.out_dir.join("illumination.json"),
        &json!({
            "provenance": Provenance::new(&lm.sha256),
            "illumination": illum_spec,
            "bounds": illum.bounds,
            "frequency": illum.frequency,
            "ratio_mean": illum.ratio_mean,
            "compliant": illum.compliant,
        }),
    )?;

    let clean = MeasurementSet::noiseless(h1.clone(), h2.clone())?;
    let mut noise_entries = Vec::new();
    if let Some(noise) = &lm.manifest.noise {
        for &seed in &noise.seeds {
            let noisy = clean.clone().with_noise(noise.target_eps, seed)?;
            let name1 = format!("H1_s{seed}");
            let name2 = format!("H2_s{seed}");
            write_field(&opts.out_dir.join(&name1), &noisy.h1)?;
            write_field(&opts.out_dir.join(&name2), &noisy.h2)?;
            let realized1 = interior_l2_norm(&noisy.h1.zip(&h1, |a, b| a - b)?);
            let realized2 = interior_l2_norm(&noisy.h2.zip(&h2, |a, b| a - b)?);
            noise_entries.push(json!({
                "seed": seed,
                "target_eps": noise.target_eps,
                "realized_eps_h1": realized1,
                "realized_eps_h2": realized2,
                "h1": name1,
                "h2": name2,
            }));
        }
    }
    write_json(
        &opts.out_dir.join("measurements.json"),
        &json!({
            "provenance": Provenance::new(&lm.sha256),
            "grid": { "dim": grid.dim(), "n": grid.n() },
            "noiseless": { "h1": "H1", "h2": "H2", "realized_eps": 0.0 },
            "noise": noise_entries,
            "solver": { "u1": stats1, "u2": stats2 },
        }),
    )?;
    opts.say(&format!(
        "simulate: wrote u1, u2, H1, H2 and {} noisy pair(s)",
        noise_entries.len()
    ));
    Ok(())
}

/// Runs the reconstruction pipeline on simulated (or provided) measurements.
pub fn cmd_reconstruct(lm: &LoadedManifest, opts: &Options) -> Result<()> {
    let manifest_path = opts.out_dir.join("measurements.json");
    require_file(&manifest_path)?;
    let measurements: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest_path)?)?;

    let (h1_name, h2_name, source) = match opts.seed_override {
        None => (
            "H1".to_string(),
            "H2".to_string(),
            json!({ "kind": "noiseless", "realized_eps": 0.0 }),
        ),
        Some(seed) => {
            let entry = measurements["noise"]
                .as_array()
                .and_then(|entries| entries.iter().find(|e| e["seed"].as_u64() == Some(seed)))
                .ok_or_else(|| {
                    Error::Parameter(format!(
                        "no noisy measurement with seed {seed} in {}",
                        manifest_path.display()
                    ))
                })?;
            (
                entry["h1"].as_str().unwrap_or("H1").to_string(),
                entry["h2"].as_str().unwrap_or("H2").to_string(),
                entry.clone(),
            )
        }
    };

    let h1 = read_field(&opts.out_dir.join(&h1_name))?;
    let h2 = read_field(&opts.out_dir.join(&h2_name))?;
    let g1_path = opts.out_dir.join("g1.trace.json");
    let g2_path = opts.out_dir.join("g2.trace.json");
    let d_bdry_path = opts.out_dir.join("D_boundary.trace.json");
    require_file(&g1_path)?;
    require_file(&g2_path)?;
    require_file(&d_bdry_path)?;
    let g1 = read_trace(&g1_path)?;
    let g2 = read_trace(&g2_path)?;
    let d_boundary = read_trace(&d_bdry_path)?;
    let illum = IlluminationPair::new(g1, g2, true)?;

    let cfg = lm.manifest.reconstruction.clone().unwrap_or_default();
    let m = MeasurementSet {
        h1,
        h2,
        noise_level: source["target_eps"].as_f64().unwrap_or(0.0),
        seed: opts.seed_override.unwrap_or(0),
    };
    let result = reconstruct(&m, &illum, &d_boundary, &cfg)?;

    write_field(&opts.out_dir.join("a_hat"), &result.a_hat)?;
    write_field(&opts.out_dir.join("u1_hat"), &result.u1_hat)?;
    write_field(&opts.out_dir.join("D_hat"), &result.d_hat)?;
    write_field(&opts.out_dir.join("sigma_hat"), &result.sigma_hat)?;

    // compare against ground truth when the phantom fields are present
    let errors_vs_truth = {
        let d_stem = opts.out_dir.join("D");
        let s_stem = opts.out_dir.join("sigma");
        if d_stem.with_extension("json").exists() && s_stem.with_extension("json").exists() {
            let d_true = read_field(&d_stem)?;
            let s_true = read_field(&s_stem)?;
            let rel = |got: &ScalarField, want: &ScalarField| -> Result<f64> {
                Ok(interior_l2_norm(&got.zip(want, |a, b| a - b)?) / interior_l2_norm(want))
            };
            Some(json!({
                "d_rel_l2": rel(&result.d_hat, &d_true)?,
                "sigma_rel_l2": rel(&result.sigma_hat, &s_true)?,
            }))
        } else {
            None
        }
    };

    let report = json!({
        "provenance": Provenance::new(&lm.sha256),
        "config": cfg,
        "source": source,
        "diagnostics": result.diagnostics,
        "solver": {
            "recover_a": result.stats.recover_a,
            "recover_u1": result.stats.recover_u1,
        },
        "errors_vs_truth": errors_vs_truth,
        "timing": { "total_seconds": result.stats.wall_seconds },
    });
    write_json(&opts.out_dir.join("result.json"), &report)?;
    opts.say(&format!(
        "reconstruct: ratio residual {:.3e}, min |grad U| {:.3e}",
        result.diagnostics.ratio_residual, result.diagnostics.min_grad_u
    ));
    Ok(())
}

/// One sweep point: the base diffusion perturbed by a seeded bump.
fn sweep_point(
    base: &CoefficientSet,
    illum: &IlluminationPair,
    spec: &SweepSpec,
    amplitude: f64,
    seed: u64,
    cfg: &qpat::elliptic::SolverConfig,
) -> Result<StabilityReport> {
    let grid = base.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut center = [0.5f64; 3];
    for c in center.iter_mut().take(grid.dim()) {
        *c += spec.center_jitter * rng.gen_range(-1.0..1.0);
    }
    let radius = spec.bump_radius;
    let bump = ScalarField::from_fn(grid, |x| {
        let mut r_sq = 0.0;
        for a in 0..grid.dim() {
            r_sq += (x[a] - center[a]).powi(2);
        }
        let rho = r_sq.sqrt() / radius;
        if rho >= 1.0 {
            0.0
        } else {
            let c = (std::f64::consts::FRAC_PI_2 * rho).cos();
            c * c
        }
    });
    let scale = spec.bump_scale;
    let d2 = base.d.zip(&bump, |d, b| d + amplitude * scale * b)?;
    let set2 = CoefficientSet::new(d2, base.sigma.clone())?;
    stability_pair(base, &set2, illum, cfg)
}

/// Runs the perturbation sweep and fits the power law.
pub fn cmd_sweep(lm: &LoadedManifest, opts: &Options) -> Result<()> {
    let grid = resolve_grid(lm, opts)?;
    let spec = lm
        .manifest
        .sweep
        .clone()
        .ok_or_else(|| Error::Parameter("manifest has no sweep section".into()))?;
    if spec.amplitudes.is_empty() {
        return Err(Error::Parameter("sweep amplitude list is empty".into()));
    }
    let seeds = if spec.seeds.is_empty() {
        vec![0]
    } else {
        spec.seeds.clone()
    };

    let base = match &lm.manifest.phantom {
        Some(p) => make_phantom(grid, p)?,
        None => CoefficientSet::new(
            ScalarField::constant(grid, 1.0),
            ScalarField::constant(grid, 1.0),
        )?,
    };
    let illum_spec = lm
        .manifest
        .illumination
        .as_ref()
        .ok_or_else(|| Error::Parameter("manifest has no illumination section".into()))?;
    let illum = make_illuminations(grid, illum_spec)?;
    let cfg = lm
        .manifest
        .reconstruction
        .clone()
        .unwrap_or_default()
        .solver;

    let points: Vec<(f64, u64)> = spec
        .amplitudes
        .iter()
        .flat_map(|&a| seeds.iter().map(move |&s| (a, s)))
        .collect();

    let run = |&(amplitude, seed): &(f64, u64)| {
        (
            amplitude,
            seed,
            sweep_point(&base, &illum, &spec, amplitude, seed, &cfg),
        )
    };
    let results: Vec<(f64, u64, Result<StabilityReport>)> = if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Parameter(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            points.par_iter().map(run).collect()
        })
    } else {
        points.iter().map(run).collect()
    };

    let mut csv = String::from("gap,eps,eps_prime,err_d,err_sigma\n");
    let mut fit_points = Vec::new();
    let mut failures = Vec::new();
    for (amplitude, seed, outcome) in &results {
        match outcome {
            Ok(report) => {
                csv.push_str(&format!(
                    "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                    report.gap(),
                    report.eps,
                    report.eps_prime,
                    report.err_d,
                    report.err_sigma
                ));
                if report.gap() > 0.0 && report.err() > 0.0 {
                    fit_points.push((report.gap(), report.err()));
                }
            }
            Err(e) => failures.push(json!({
                "amplitude": amplitude,
                "seed": seed,
                "error": e.to_string(),
            })),
        }
    }
    write_atomic(&opts.out_dir.join("sweep.csv"), csv.as_bytes())?;

    let (fit, refused) = match holder_fit(&fit_points) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    write_json(
        &opts.out_dir.join("holder_fit.json"),
        &json!({
            "provenance": Provenance::new(&lm.sha256),
            "n_points": fit_points.len(),
            "fit": fit,
            "refused_reason": refused,
            "failures": failures,
        }),
    )?;
    opts.say(&format!(
        "sweep: {} points, {} failures{}",
        fit_points.len(),
        failures.len(),
        match &fit {
            Some(f) => format!(", theta = {:.3} (r² = {:.3})", f.theta, f.r_squared),
            None => ", fit refused".to_string(),
        }
    ));
    Ok(())
}

/// Prints the unimodality report of the simulated illumination ratio.
/// Returns false when a check fails (exit code 1).
pub fn cmd_check_g(
    lm: &LoadedManifest,
    opts: &Options,
    g1_path: Option<&Path>,
    g2_path: Option<&Path>,
) -> Result<bool> {
    let default_g1 = opts.out_dir.join("g1.trace.json");
    let default_g2 = opts.out_dir.join("g2.trace.json");
    let g1_path = g1_path.unwrap_or(&default_g1);
    let g2_path = g2_path.unwrap_or(&default_g2);
    require_file(g1_path)?;
    require_file(g2_path)?;
    let g1 = read_trace(g1_path)?;
    let g2 = read_trace(g2_path)?;

    let mut checks = Vec::new();
    let positive = g1.min_value() > 0.0 && g2.min_value() > 0.0;
    checks.push(json!({
        "name": "illumination positivity (g_i > 0 on the boundary)",
        "pass": positive,
        "min_g1": g1.min_value(),
        "min_g2": g2.min_value(),
    }));

    let mut all_pass = positive;
    let report = if positive {
        let ratio = g2.zip(&g1, |a, b| a / b)?;
        let tol = default_level_tol(&ratio);
        let unimodality = unimodality_check(&ratio, tol, &[]);
        all_pass &= unimodality.pass;
        let mean = boundary_mean(&ratio);
        let centered = ratio.map(|v| v - mean);
        let l2_centered = boundary_l2_norm(&centered);
        let frequency = frequency_function(&ratio).ok();
        all_pass &= frequency.is_some();
        checks.push(json!({
            "name": "quantitative unimodality of g2/g1",
            "pass": unimodality.pass,
        }));
        json!({
            "provenance": Provenance::new(&lm.sha256),
            "checks": checks,
            "unimodality": unimodality,
            "frequency": frequency,
            "ratio_l2_centered": l2_centered,
            "pass": all_pass,
        })
    } else {
        json!({
            "provenance": Provenance::new(&lm.sha256),
            "checks": checks,
            "pass": false,
        })
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(all_pass)
}
