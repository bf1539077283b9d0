//! Command-line frontend: composable pipeline stages writing deterministic
//! artifacts plus a manifest per stage.

use clap::{Parser, Subcommand};
use hubbard_vca::config::{BackendConfig, GibbsSource, RunConfig};
use hubbard_vca::ed::{lehmann_green, matsubara_occupation, solve_cluster};
use hubbard_vca::emulator::{
    exact_gibbs, measure_nambu_correlators, prepare_gibbs_riera, Emulator, GibbsPrepConfig,
};
use hubbard_vca::error::VcaError;
use hubbard_vca::greens::retarded_transform;
use hubbard_vca::observables::{scalar_observables, spectra_and_distributions};
use hubbard_vca::output::{fmt_f, stage_dir, write_table, Manifest};
use hubbard_vca::vca::{find_saddle, potthoff_scan, OmegaEvaluator};
use std::path::Path;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "hubbard-vca",
    about = "Variational cluster solver for the attractive Fermi-Hubbard model",
    version
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true, default_value = "config.json")]
    config: String,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rayon worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the backend kind (ed | emulator).
    #[arg(long, global = true)]
    backend: Option<String>,
    #[command(subcommand)]
    stage: Stage,
}

#[derive(Subcommand)]
enum Stage {
    /// Diagonalize the cluster and write its spectrum and Ω′.
    SolveCluster,
    /// Produce the cluster Green's function (traces, time and frequency domain).
    MeasureGf,
    /// Evaluate Ω_t on a (μ′, Δ′) grid.
    PotthoffScan,
    /// Newton-Raphson search for the stationary Weiss fields.
    Saddle,
    /// Lattice spectra, momentum distributions and scalar observables.
    Observables {
        /// Read the variational point from a previous saddle stage.
        #[arg(long)]
        from_saddle: Option<String>,
    },
    /// Study the phase-estimation Gibbs preparation.
    GibbsStudy,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                VcaError::Config(_) | VcaError::Domain(_) => 2,
                VcaError::Resource(_) => 4,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}

fn load_config(cli: &Cli) -> Result<RunConfig, VcaError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| VcaError::config(format!("cannot read {}: {e}", cli.config)))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = Some(threads);
    }
    if let Some(kind) = &cli.backend {
        cfg.backend = match kind.as_str() {
            "ed" => BackendConfig::Ed,
            "emulator" => BackendConfig::Emulator {
                evolution: hubbard_vca::emulator::Evolution::Exact,
                gibbs: GibbsSource::Exact,
                shots: 0,
            },
            other => {
                return Err(VcaError::config(format!(
                    "unknown backend override '{other}' (expected ed | emulator)"
                )))
            }
        };
        cfg.validate()?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32, VcaError> {
    let cfg = load_config(&cli)?;
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| VcaError::config(format!("thread pool: {e}")))?;
    }
    let started = Instant::now();
    let config_echo = serde_json::to_value(&cfg)?;

    let (stage_name, mut manifest, code) = match &cli.stage {
        Stage::SolveCluster => {
            let dir = stage_dir(&cfg.output_dir, "solve-cluster")?;
            let mut manifest = Manifest::new("solve-cluster", cfg.seed, config_echo.clone());
            run_solve_cluster(&cfg, &dir, &mut manifest)?;
            ("solve-cluster", manifest, 0)
        }
        Stage::MeasureGf => {
            let dir = stage_dir(&cfg.output_dir, "measure-gf")?;
            let mut manifest = Manifest::new("measure-gf", cfg.seed, config_echo.clone());
            run_measure_gf(&cfg, &dir, &mut manifest)?;
            ("measure-gf", manifest, 0)
        }
        Stage::PotthoffScan => {
            let dir = stage_dir(&cfg.output_dir, "potthoff-scan")?;
            let mut manifest = Manifest::new("potthoff-scan", cfg.seed, config_echo.clone());
            run_potthoff_scan(&cfg, &dir, &mut manifest)?;
            ("potthoff-scan", manifest, 0)
        }
        Stage::Saddle => {
            let dir = stage_dir(&cfg.output_dir, "saddle")?;
            let mut manifest = Manifest::new("saddle", cfg.seed, config_echo.clone());
            let converged = run_saddle(&cfg, &dir, &mut manifest)?;
            ("saddle", manifest, if converged { 0 } else { 3 })
        }
        Stage::Observables { from_saddle } => {
            let dir = stage_dir(&cfg.output_dir, "observables")?;
            let mut manifest = Manifest::new("observables", cfg.seed, config_echo.clone());
            run_observables(&cfg, from_saddle.as_deref(), &dir, &mut manifest)?;
            ("observables", manifest, 0)
        }
        Stage::GibbsStudy => {
            let dir = stage_dir(&cfg.output_dir, "gibbs-study")?;
            let mut manifest = Manifest::new("gibbs-study", cfg.seed, config_echo.clone());
            run_gibbs_study(&cfg, &dir, &mut manifest)?;
            ("gibbs-study", manifest, 0)
        }
    };

    manifest.wall_time_s = started.elapsed().as_secs_f64();
    let dir = Path::new(&cfg.output_dir).join(stage_name);
    manifest.write(&dir)?;
    Ok(code)
}

fn run_solve_cluster(cfg: &RunConfig, dir: &Path, manifest: &mut Manifest) -> Result<(), VcaError> {
    let model = cfg.cluster_model()?;
    let v = cfg.variational_params();
    let (sol, poles) = solve_cluster(&model, &v)?;
    write_table(
        dir.join("spectrum.csv"),
        &["index", "energy_t"],
        sol.energies
            .iter()
            .enumerate()
            .map(|(i, e)| vec![i.to_string(), fmt_f(*e)]),
    )?;
    manifest.artifacts.push("spectrum.csv".into());

    let summary = serde_json::json!({
        "l_c": model.l_c,
        "beta": model.beta(),
        "log_z": sol.log_z,
        "omega_prime_per_cluster": sol.omega_prime(),
        "omega_prime_per_site": sol.omega_prime() / model.l_c as f64,
        "n_poles": poles.omega.len(),
    });
    std::fs::write(
        dir.join("cluster_summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    manifest.artifacts.push("cluster_summary.json".into());
    println!(
        "solve-cluster: {} eigenstates, Ω′ per site = {:.6}",
        sol.energies.len(),
        sol.omega_prime() / model.l_c as f64
    );
    Ok(())
}

/// Build the cluster Green's function along the configured backend route;
/// returns (gf, Ω′ per cluster, raw traces if the emulator ran).
fn cluster_gf(
    cfg: &RunConfig,
) -> Result<
    (
        hubbard_vca::greens::NambuGreensFunction,
        f64,
        Option<hubbard_vca::emulator::NambuMeasurement>,
    ),
    VcaError,
> {
    let model = cfg.cluster_model()?;
    let v = cfg.variational_params();
    let grid = cfg.time_grid();
    match &cfg.backend {
        BackendConfig::Ed => {
            let (sol, poles) = solve_cluster(&model, &v)?;
            let gf = lehmann_green(&poles, &grid.omega_points(), grid.eta)?;
            Ok((gf, sol.omega_prime(), None))
        }
        BackendConfig::Emulator {
            evolution,
            gibbs,
            shots,
        } => {
            let h = hubbard_vca::cluster::build_cluster_hamiltonian(&model, &v)?;
            let sol = hubbard_vca::ed::diagonalize(&h.total, model.beta())?;
            let emu = Emulator::new(&h)?;
            let beta = model.beta();
            let rho = match gibbs {
                GibbsSource::Exact => exact_gibbs(&h.total, beta)?,
                GibbsSource::Riera { m, r, q, lambda } => {
                    let prep_cfg = GibbsPrepConfig {
                        m: *m,
                        r: *r,
                        q: *q,
                        lambda: *lambda,
                        target_beta: beta,
                    };
                    prepare_gibbs_riera(&h.total, &prep_cfg, cfg.seed)?.rho_s
                }
            };
            let shot_cfg = if *shots > 0 {
                Some((*shots, cfg.seed))
            } else {
                None
            };
            let meas = measure_nambu_correlators(
                &emu,
                &rho,
                model.l_c,
                &grid.tau_points(),
                *evolution,
                shot_cfg,
            )?;
            let gf = retarded_transform(&meas.correlators, 2 * model.l_c, &grid)?;
            Ok((gf, sol.omega_prime(), Some(meas)))
        }
    }
}

fn run_measure_gf(cfg: &RunConfig, dir: &Path, manifest: &mut Manifest) -> Result<(), VcaError> {
    let model = cfg.cluster_model()?;
    let (gf, _, meas) = cluster_gf(cfg)?;

    if let Some(meas) = &meas {
        write_table(
            dir.join("traces.csv"),
            &["evolved", "fixed", "tau_t", "p0", "p1", "c"],
            meas.traces.iter().flat_map(|lt| {
                lt.trace.tau.iter().enumerate().map(move |(i, &t)| {
                    vec![
                        lt.evolved.clone(),
                        lt.fixed.clone(),
                        fmt_f(t),
                        fmt_f(lt.trace.p0[i]),
                        fmt_f(lt.trace.p1[i]),
                        fmt_f(lt.trace.c[i]),
                    ]
                })
            }),
        )?;
        manifest.artifacts.push("traces.csv".into());

        let n_orb = 2 * model.l_c;
        write_table(
            dir.join("gf_time.csv"),
            &["nambu_a", "nambu_b", "tau_t", "re", "im"],
            (0..n_orb * n_orb).flat_map(|ab| {
                let series = &meas.correlators[ab];
                let tau = &meas.tau;
                tau.iter().enumerate().map(move |(i, &t)| {
                    vec![
                        (ab / n_orb).to_string(),
                        (ab % n_orb).to_string(),
                        fmt_f(t),
                        fmt_f(series[i].re),
                        fmt_f(series[i].im),
                    ]
                })
            }),
        )?;
        manifest.artifacts.push("gf_time.csv".into());
    }

    let n_orb = gf.n_orbitals();
    let mut header: Vec<String> = vec!["omega_t".to_string()];
    for a in 0..n_orb {
        for b in 0..n_orb {
            header.push(format!("re_g_{a}{b}"));
            header.push(format!("im_g_{a}{b}"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    write_table(
        dir.join("gf_omega.csv"),
        &header_refs,
        gf.omega.iter().enumerate().map(|(iw, &w)| {
            let mut row = vec![fmt_f(w)];
            for a in 0..n_orb {
                for b in 0..n_orb {
                    let z = gf.mats[iw][(a, b)];
                    row.push(fmt_f(z.re));
                    row.push(fmt_f(z.im));
                }
            }
            row
        }),
    )?;
    manifest.artifacts.push("gf_omega.csv".into());
    println!(
        "measure-gf: {} frequencies on [{:.3}, {:.3}], η = {:.4}",
        gf.omega.len(),
        gf.omega[0],
        gf.omega[gf.omega.len() - 1],
        gf.eta
    );
    Ok(())
}

fn run_potthoff_scan(cfg: &RunConfig, dir: &Path, manifest: &mut Manifest) -> Result<(), VcaError> {
    let scan = cfg
        .scan
        .as_ref()
        .ok_or_else(|| VcaError::config("potthoff-scan requires a `scan` block"))?;
    let model = cfg.cluster_model()?;
    let ev = OmegaEvaluator::new(&model, cfg.time_grid(), cfg.gf_route());
    let base = cfg.variational_params();
    let rows = potthoff_scan(
        &ev,
        (scan.mu_lo, scan.mu_hi, scan.mu_n),
        (scan.delta_lo, scan.delta_hi, scan.delta_n),
        &base,
    )?;
    write_table(
        dir.join("potthoff_scan.csv"),
        &["mu_prime_t", "delta_prime_t", "omega_per_site_t"],
        rows.iter()
            .map(|p| vec![fmt_f(p.mu_prime), fmt_f(p.delta_prime), fmt_f(p.omega)]),
    )?;
    manifest.artifacts.push("potthoff_scan.csv".into());
    println!("potthoff-scan: {} grid points", rows.len());
    Ok(())
}

fn run_saddle(cfg: &RunConfig, dir: &Path, manifest: &mut Manifest) -> Result<bool, VcaError> {
    let model = cfg.cluster_model()?;
    let ev = OmegaEvaluator::new(&model, cfg.time_grid(), cfg.gf_route());
    let res = find_saddle(
        &ev,
        &cfg.variational_params(),
        &cfg.variational.active,
        cfg.solver.h,
        cfg.solver.eps_omega,
        cfg.solver.max_iter,
        &cfg.variational.bounds,
    )?;
    std::fs::write(dir.join("saddle.json"), serde_json::to_string_pretty(&res)?)?;
    manifest.artifacts.push("saddle.json".into());
    write_table(
        dir.join("saddle_path.csv"),
        &[
            "iter",
            "mu_prime_t",
            "delta_prime_t",
            "delta_d_prime_t",
            "m_prime_t",
            "grad_norm",
        ],
        res.path.iter().enumerate().map(|(i, p)| {
            vec![
                i.to_string(),
                fmt_f(p.0),
                fmt_f(p.1),
                fmt_f(p.2),
                fmt_f(p.3),
                fmt_f(p.4),
            ]
        }),
    )?;
    manifest.artifacts.push("saddle_path.csv".into());
    println!(
        "saddle: converged = {}, (μ′*, Δ′*) = ({:.4}, {:.4}), |∇Ω| = {:.2e}, {} iterations",
        res.converged,
        res.params_star.mu_prime,
        res.params_star.delta_prime,
        res.gradient_norm,
        res.iterations
    );
    Ok(res.converged)
}

fn run_observables(
    cfg: &RunConfig,
    from_saddle: Option<&str>,
    dir: &Path,
    manifest: &mut Manifest,
) -> Result<(), VcaError> {
    let model = cfg.cluster_model()?;
    let mut cfg = cfg.clone();
    if let Some(path) = from_saddle {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VcaError::config(format!("cannot read saddle file {path}: {e}")))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let p = &value["params_star"];
        let read = |k: &str| -> Result<f64, VcaError> {
            p[k].as_f64()
                .ok_or_else(|| VcaError::config(format!("saddle file lacks params_star.{k}")))
        };
        cfg.variational.mu_prime = read("mu_prime")?;
        cfg.variational.delta_prime = read("delta_prime")?;
        cfg.variational.delta_d_prime = read("delta_d_prime")?;
        cfg.variational.m_prime = read("m_prime")?;
    }
    let v = cfg.variational_params();
    let (gf, _, _) = cluster_gf(&cfg)?;
    let spectra = spectra_and_distributions(&model, &v, &gf)?;
    let scalars = scalar_observables(&model, &spectra);

    write_table(
        dir.join("akw.csv"),
        &["kx", "ky", "omega_t", "a", "f"],
        spectra.k_full.iter().enumerate().flat_map(|(ik, k)| {
            let spectra = &spectra;
            spectra.omega.iter().enumerate().map(move |(iw, &w)| {
                vec![
                    fmt_f(k.x),
                    fmt_f(k.y),
                    fmt_f(w),
                    fmt_f(spectra.a_kw[ik][iw]),
                    fmt_f(spectra.f_kw[ik][iw]),
                ]
            })
        }),
    )?;
    manifest.artifacts.push("akw.csv".into());

    write_table(
        dir.join("nk.csv"),
        &["kx", "ky", "n_k", "f_k"],
        spectra.k_full.iter().enumerate().map(|(ik, k)| {
            vec![
                fmt_f(k.x),
                fmt_f(k.y),
                fmt_f(spectra.n_k[ik]),
                fmt_f(spectra.f_k[ik]),
            ]
        }),
    )?;
    manifest.artifacts.push("nk.csv".into());

    write_table(
        dir.join("nomega.csv"),
        &["omega_t", "n_omega"],
        spectra
            .omega
            .iter()
            .zip(&spectra.n_omega)
            .map(|(&w, &n)| vec![fmt_f(w), fmt_f(n)]),
    )?;
    manifest.artifacts.push("nomega.csv".into());

    // reference Matsubara occupations (ED route, broadening-free)
    let (_, poles) = solve_cluster(&model, &v)?;
    let occ = matsubara_occupation(&model, &v, &poles, 800, 1e-3)?;
    write_table(
        dir.join("nk_matsubara.csv"),
        &["kx", "ky", "n_k"],
        model
            .k_full_grid()
            .iter()
            .zip(&occ.n_k)
            .map(|(k, &n)| vec![fmt_f(k.x), fmt_f(k.y), fmt_f(n)]),
    )?;
    manifest.artifacts.push("nk_matsubara.csv".into());

    std::fs::write(
        dir.join("scalars.json"),
        serde_json::to_string_pretty(&scalars)?,
    )?;
    manifest.artifacts.push("scalars.json".into());
    println!(
        "observables: n = {:.4}, Δ = {:.4e}, ξ = {}",
        scalars.n,
        scalars.delta,
        scalars
            .xi
            .map(|x| format!("{x:.4}"))
            .unwrap_or_else(|| "undefined".into())
    );
    Ok(())
}

fn run_gibbs_study(cfg: &RunConfig, dir: &Path, manifest: &mut Manifest) -> Result<(), VcaError> {
    let model = cfg.cluster_model()?;
    let (r, q, lambda) = match &cfg.backend {
        BackendConfig::Emulator {
            gibbs: GibbsSource::Riera { r, q, lambda, .. },
            ..
        } => (*r, *q, *lambda),
        _ => {
            return Err(VcaError::config(
                "gibbs-study requires backend.kind = emulator with gibbs.kind = riera",
            ))
        }
    };
    let base_m = match &cfg.backend {
        BackendConfig::Emulator {
            gibbs: GibbsSource::Riera { m, .. },
            ..
        } => *m,
        _ => unreachable!(),
    };
    let m_values = cfg
        .gibbs_study
        .as_ref()
        .map(|g| g.m_values.clone())
        .unwrap_or_else(|| vec![base_m]);

    let h = hubbard_vca::cluster::build_cluster_hamiltonian(&model, &cfg.variational_params())?;
    let beta = model.beta();
    let mut rows = Vec::new();
    for m in m_values {
        let prep_cfg = GibbsPrepConfig {
            m,
            r,
            q,
            lambda,
            target_beta: beta,
        };
        let out = prepare_gibbs_riera(&h.total, &prep_cfg, cfg.seed)?;
        println!(
            "gibbs-study: m = {m}, s* = {}, β(s*) = {:.4}, β_fit = {:.4}, D = {:.4e} ≤ bound {:.4e}, runs = {}",
            out.s_star,
            out.beta_formula,
            out.beta_fit,
            out.trace_distance,
            out.error_bound,
            out.runs_used
        );
        rows.push(vec![
            m.to_string(),
            r.to_string(),
            q.to_string(),
            fmt_f(lambda),
            out.s_star.to_string(),
            fmt_f(out.beta_formula),
            fmt_f(out.beta_fit),
            fmt_f(out.delta_beta),
            fmt_f(out.trace_distance),
            fmt_f(out.error_bound),
            out.runs_used.to_string(),
            fmt_f(out.expected_runs_bound),
        ]);
    }
    write_table(
        dir.join("gibbs_study.csv"),
        &[
            "m",
            "r",
            "q",
            "lambda",
            "s_star",
            "beta_formula",
            "beta_fit",
            "delta_beta",
            "trace_distance",
            "error_bound",
            "runs_used",
            "expected_runs_bound",
        ],
        rows,
    )?;
    manifest.artifacts.push("gibbs_study.csv".into());
    Ok(())
}
