//! Command-line front end: parses a run configuration, dispatches one of
//! the documented subcommands and writes hashed artifacts.
//!
//! Exit codes: 0 success, 2 solver non-convergence, 3 spreading detected,
//! 4 under-resolved propagation or overflow, 64 usage, 65 configuration.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use edgpe::config::{parse_config, RunConfig};
use edgpe::diagnostics::qualitative_diagnostics;
use edgpe::dynamics::{propagate, scattering_diagnostic, strang_step, ScatteringConfig};
use edgpe::error::{EdgpeError, Result};
use edgpe::gaussian::{gaussian_scan, negative_energy_window, GaussianAnsatz, MassWindow, ScanRow};
use edgpe::grid::WaveField;
use edgpe::ground_state::{gamma_curve, minimize_on_sphere};
use edgpe::io::{
    field_to_bytes, gamma_to_csv, read_field, scan_to_csv, trace_to_csv, RunWriter,
};
use edgpe::kernel::{b_functional, khat_range};
use edgpe::params::ModelParams;
use edgpe::thresholds::{threshold_report, ThresholdConfig};
use edgpe::{Grid, Regime};

#[derive(Parser)]
#[command(
    name = "edgpe",
    version,
    about = "Pseudospectral toolkit for the extended dipolar Gross-Pitaevskii equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Full run-config JSON file; explicit flags override its sections.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Model parameters: inline JSON or a path to a JSON file.
    #[arg(long, value_name = "JSON|FILE")]
    params: Option<String>,
    /// Output directory for artifacts.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize E on the mass sphere and write the state plus reports.
    GroundState {
        #[command(flatten)]
        common: Common,
        /// Constraint mass c = ‖u‖₂².
        #[arg(long)]
        c: f64,
    },
    /// Estimate γ(c) over a comma-separated mass list.
    GammaCurve {
        #[command(flatten)]
        common: Common,
        /// Ascending masses, e.g. "1,2,5,10".
        #[arg(long, value_name = "LIST")]
        c_list: String,
    },
    /// Sweep the closed-form Gaussian energies over widths and masses.
    GaussianScan {
        #[command(flatten)]
        common: Common,
        /// Samples per scanned axis.
        #[arg(long, default_value_t = 28)]
        points: usize,
    },
    /// Propagate initial data, recording the conservation trace.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Initial state: a snapshot path or "gaussian:SIGMA,TAU,C".
        #[arg(long, value_name = "SNAPSHOT|SPEC")]
        init: String,
        /// Time step (overrides the config).
        #[arg(long)]
        dt: Option<f64>,
        /// Final time (overrides the config).
        #[arg(long, value_name = "T")]
        t_end: Option<f64>,
        /// Trace/snapshot cadence in steps (overrides the config).
        #[arg(long)]
        stride: Option<usize>,
        /// Also write the intermediate snapshot series.
        #[arg(long)]
        save_snapshots: bool,
    },
    /// Run the small-data scattering diagnostic.
    Scatter {
        #[command(flatten)]
        common: Common,
        /// Initial state: a snapshot path or "gaussian:SIGMA,TAU,C".
        #[arg(long, value_name = "SNAPSHOT|SPEC")]
        init: String,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        checkpoints: Option<usize>,
        /// Small-data gate on ‖ψ₀‖_{H¹}.
        #[arg(long)]
        h1_threshold: Option<f64>,
    },
    /// Emit the c_a / c_b / c_c threshold report.
    Thresholds {
        #[command(flatten)]
        common: Common,
        /// Points per axis of the Gaussian width scan.
        #[arg(long)]
        scan_points: Option<usize>,
    },
    /// Run the cross-module invariant suite.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code().clamp(0, 255) as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::GroundState { common, c } => cmd_ground_state(&common, c),
        Command::GammaCurve { common, c_list } => cmd_gamma_curve(&common, &c_list),
        Command::GaussianScan { common, points } => cmd_gaussian_scan(&common, points),
        Command::Evolve {
            common,
            init,
            dt,
            t_end,
            stride,
            save_snapshots,
        } => cmd_evolve(&common, &init, dt, t_end, stride, save_snapshots),
        Command::Scatter {
            common,
            init,
            dt,
            t_min,
            t_max,
            checkpoints,
            h1_threshold,
        } => cmd_scatter(&common, &init, dt, t_min, t_max, checkpoints, h1_threshold),
        Command::Thresholds {
            common,
            scan_points,
        } => cmd_thresholds(&common, scan_points),
        Command::Verify { common } => cmd_verify(&common),
    }
}

/// Resolves the run configuration from `--config` plus overrides, and
/// validates the `EDGPE_THREADS` cap.
fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(arg) = &common.params {
        cfg.params = parse_params_arg(arg)?;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    let _threads = thread_cap()?;
    Ok(cfg)
}

/// `--params` accepts inline JSON (leading `{`) or a file path.
fn parse_params_arg(arg: &str) -> Result<ModelParams> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg)?
    };
    let params: ModelParams = serde_json::from_str(&text)
        .map_err(|e| EdgpeError::Config(vec![format!("schema.params: {e}")]))?;
    params.validate()?;
    Ok(params)
}

/// Parses `EDGPE_THREADS`. The toolkit computes on a single thread, so
/// any positive cap is honored as-is; the variable is still validated so
/// misconfigured environments fail loudly.
fn thread_cap() -> Result<usize> {
    match std::env::var("EDGPE_THREADS") {
        Err(_) => Ok(1),
        Ok(raw) => raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                EdgpeError::Config(vec![format!(
                    "schema.EDGPE_THREADS: {raw:?} is not a positive integer"
                )])
            }),
    }
}

/// `--init` accepts a snapshot path or `gaussian:SIGMA,TAU,C` built on
/// the configured grid.
fn load_initial_state(init: &str, cfg: &RunConfig) -> Result<WaveField> {
    if let Some(spec) = init.strip_prefix("gaussian:") {
        let parts: Vec<f64> = spec
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| {
                EdgpeError::InvalidArgument(format!("bad gaussian spec {spec:?}: {e}"))
            })?;
        if parts.len() != 3 {
            return Err(EdgpeError::InvalidArgument(format!(
                "gaussian spec {spec:?} needs exactly SIGMA,TAU,C"
            )));
        }
        let ansatz = GaussianAnsatz::new(parts[0], parts[1], parts[2])?;
        let grid = Grid::new(cfg.grid.l, cfg.grid.n)?;
        Ok(ansatz.field(grid))
    } else {
        read_field(std::path::Path::new(init))
    }
}

fn cmd_ground_state(common: &Common, c: f64) -> Result<u8> {
    let cfg = load_config(common)?;
    let grid = Grid::new(cfg.grid.l, cfg.grid.n)?;
    let (state, breakdown, chem, converged) =
        minimize_on_sphere(c, &cfg.params, grid, &cfg.solver)?;

    let mut writer = RunWriter::create(&cfg.output_dir)?;
    writer.write_json("config.json", &cfg)?;
    writer.write_field("state.edgp", &state)?;
    writer.write_json("energy.json", &breakdown)?;
    writer.write_json("chemical_potential.json", &chem)?;
    writer.write_json("diagnostics.json", &qualitative_diagnostics(&state))?;
    writer.finish()?;

    println!(
        "ground-state: c = {c}, E = {:.10}, residual = {:.3e}, converged = {converged}",
        breakdown.e, chem.residual_norm
    );
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(if converged { 0 } else { 2 })
}

fn cmd_gamma_curve(common: &Common, c_list: &str) -> Result<u8> {
    let cfg = load_config(common)?;
    let masses: Vec<f64> = c_list
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| EdgpeError::InvalidArgument(format!("bad mass list: {e}")))?;
    let grid = Grid::new(cfg.grid.l, cfg.grid.n)?;
    let curve = gamma_curve(&masses, &cfg.params, grid, &cfg.solver)?;

    let mut writer = RunWriter::create(&cfg.output_dir)?;
    writer.write_json("config.json", &cfg)?;
    writer.write_bytes("gamma.csv", &gamma_to_csv(&curve))?;
    writer.write_json("gamma.json", &curve)?;
    writer.finish()?;

    for (c, g) in curve.masses.iter().zip(&curve.gammas) {
        println!("gamma({c}) = {g:.10}");
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(0)
}

/// Summary of a closed-form scan: the best witness and, when it exists,
/// the negative-energy mass window at the best widths.
#[derive(Serialize)]
struct ScanSummary {
    regime: Regime,
    best: ScanRow,
    witness_cc: Option<f64>,
    window: Option<MassWindow>,
    note: String,
}

fn cmd_gaussian_scan(common: &Common, points: usize) -> Result<u8> {
    let cfg = load_config(common)?;
    if points < 2 {
        return Err(EdgpeError::InvalidArgument(
            "the scan needs at least 2 points per axis".into(),
        ));
    }
    let widths = log_spaced(0.25, 10.0, points);
    let masses = log_spaced(0.1, 1e3, points);
    let report = gaussian_scan(&cfg.params, &widths, &widths, &masses)?;

    let window = if report.best.e < 0.0 {
        Some(negative_energy_window(
            report.best.sigma,
            report.best.tau,
            &cfg.params,
        )?)
    } else {
        None
    };
    let note = if report.witness_cc.is_some() {
        "negative-energy witness found".to_string()
    } else {
        "no negative-energy witness".to_string()
    };
    let summary = ScanSummary {
        regime: cfg.params.regime(),
        best: report.best,
        witness_cc: report.witness_cc,
        window,
        note: note.clone(),
    };

    let mut writer = RunWriter::create(&cfg.output_dir)?;
    writer.write_json("config.json", &cfg)?;
    writer.write_bytes("scan.csv", &scan_to_csv(&report.rows))?;
    writer.write_json("summary.json", &summary)?;
    writer.finish()?;

    println!(
        "gaussian-scan: {} rows, best E = {:.6e} at (sigma, tau, c) = ({}, {}, {}); {note}",
        report.rows.len(),
        report.best.e,
        report.best.sigma,
        report.best.tau,
        report.best.c
    );
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(0)
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

fn cmd_evolve(
    common: &Common,
    init: &str,
    dt: Option<f64>,
    t_end: Option<f64>,
    stride: Option<usize>,
    save_snapshots: bool,
) -> Result<u8> {
    let mut cfg = load_config(common)?;
    if let Some(dt) = dt {
        cfg.propagation.dt = dt;
    }
    if let Some(t_end) = t_end {
        cfg.propagation.t_end = t_end;
    }
    if let Some(stride) = stride {
        cfg.propagation.snapshot_stride = stride;
    }
    let psi0 = load_initial_state(init, &cfg)?;
    let (final_state, trace, snapshots) = propagate(&psi0, &cfg.params, &cfg.propagation)?;

    let mut writer = RunWriter::create(&cfg.output_dir)?;
    writer.write_json("config.json", &cfg)?;
    writer.write_bytes("trace.csv", &trace_to_csv(&trace))?;
    writer.write_field("final.edgp", &final_state)?;
    if save_snapshots {
        for (k, snap) in snapshots.iter().enumerate() {
            writer.write_bytes(&format!("snapshot_{k:04}.edgp"), &field_to_bytes(snap))?;
        }
    }
    writer.finish()?;

    println!(
        "evolve: t = {}, steps of {}, mass drift {:.3e}, energy drift {:.3e}",
        cfg.propagation.t_end,
        cfg.propagation.dt,
        trace.max_mass_drift(),
        trace.max_energy_drift()
    );
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_scatter(
    common: &Common,
    init: &str,
    dt: Option<f64>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    checkpoints: Option<usize>,
    h1_threshold: Option<f64>,
) -> Result<u8> {
    let cfg = load_config(common)?;
    let mut sc = ScatteringConfig::default();
    if let Some(v) = dt {
        sc.dt = v;
    }
    if let Some(v) = t_min {
        sc.t_min = v;
    }
    if let Some(v) = t_max {
        sc.t_max = v;
    }
    if let Some(v) = checkpoints {
        sc.checkpoints = v;
    }
    if let Some(v) = h1_threshold {
        sc.h1_threshold = v;
    }
    let psi0 = load_initial_state(init, &cfg)?;
    let report = scattering_diagnostic(&psi0, &cfg.params, &sc)?;

    let mut writer = RunWriter::create(&cfg.output_dir)?;
    writer.write_json("config.json", &cfg)?;
    writer.write_json("scattering.json", &report)?;
    writer.write_field("psi_plus.edgp", &report.psi_plus)?;
    writer.finish()?;

    println!(
        "scatter: cauchy_consistent = {}, boundary fraction = {:.3e}",
        report.cauchy_consistent, report.boundary_fraction
    );
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(0)
}

fn cmd_thresholds(common: &Common, scan_points: Option<usize>) -> Result<u8> {
    let cfg = load_config(common)?;
    let mut tc = ThresholdConfig::default();
    if common.config.is_some() {
        tc.grid = cfg.grid;
        tc.solver = cfg.solver.clone();
    }
    if let Some(points) = scan_points {
        tc.scan_points = points;
    }
    let report = threshold_report(&cfg.params, &tc)?;

    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| EdgpeError::InvalidArgument(format!("json encoding: {e}")))?;
    println!("{text}");
    if common.out.is_some() {
        let mut writer = RunWriter::create(&cfg.output_dir)?;
        writer.write_json("config.json", &cfg)?;
        writer.write_json("thresholds.json", &report)?;
        writer.finish()?;
        eprintln!("artifacts in {}", cfg.output_dir.display());
    }
    Ok(0)
}

/// Frozen optimal constant of the quartic interpolation inequality at
/// σ = 1, pinned by the unit tests of the `gn` module.
const GN_C1: f64 = 0.4492570155;

fn cmd_verify(common: &Common) -> Result<u8> {
    let cfg = load_config(common)?;
    let mut all_ok = true;
    let mut check = |name: &str, outcome: std::result::Result<String, String>| {
        match outcome {
            Ok(detail) => println!("PASS {name} — {detail}"),
            Err(detail) => {
                all_ok = false;
                println!("FAIL {name} — {detail}");
            }
        };
    };

    check("kernel-range", verify_kernel_range(&cfg));
    check("interaction-bound", verify_interaction_bound(&cfg));
    check("gaussian-oracle", verify_gaussian_oracle());
    check("gn-inequality", verify_gn_inequality(&cfg));
    check("mass-renormalization", verify_mass_renormalization(&cfg));
    check("snapshot-roundtrip", verify_snapshot_roundtrip(&cfg));
    check("free-propagator", verify_free_propagator());
    check("conservation-order", verify_conservation_order());
    check("ground-state-smoke", verify_ground_state_smoke());

    if all_ok {
        println!("verify: all checks passed");
        Ok(0)
    } else {
        println!("verify: FAILURES above");
        Ok(1)
    }
}

type Check = std::result::Result<String, String>;

fn verify_kernel_range(cfg: &RunConfig) -> Check {
    let grid = Grid::new(cfg.grid.l, cfg.grid.n).map_err(|e| e.to_string())?;
    let (lo, hi) = khat_range(&grid);
    let (kmin, kmax) = (
        -4.0 * std::f64::consts::PI / 3.0,
        8.0 * std::f64::consts::PI / 3.0,
    );
    if (kmin..=kmin + 1e-3).contains(&lo) && (kmax - 1e-3..=kmax).contains(&hi) {
        Ok(format!("min {lo:.6}, max {hi:.6}"))
    } else {
        Err(format!("range [{lo}, {hi}] misses [{kmin}, {kmax}]"))
    }
}

fn verify_interaction_bound(cfg: &RunConfig) -> Check {
    let grid = Grid::new([16.0; 3], [32; 3]).map_err(|e| e.to_string())?;
    let mut fft = edgpe::fft::Fft3::new(Arc::clone(&grid));
    let xi = cfg.params.xi_bound();
    let mut worst = 0.0f64;
    for seed in 0..25 {
        let u = edgpe::rng::smooth_random_field(&mut fft, cfg.seed ^ seed, 1.2);
        let ratio = b_functional(&u, &cfg.params).abs() / (xi * u.lp_power(4.0));
        worst = worst.max(ratio);
    }
    if worst <= 1.0 + 1e-8 {
        Ok(format!("max |B|/(Xi·||u||_4^4) = {worst:.9}"))
    } else {
        Err(format!("bound violated: ratio {worst}"))
    }
}

fn verify_gaussian_oracle() -> Check {
    let grid = Grid::new([16.0; 3], [48; 3]).map_err(|e| e.to_string())?;
    let cases = [(1.5, 1.5, 2.0, 4.5), (1.0, 2.0, 3.0, 5.0), (2.0, 1.0, 1.5, 6.0)];
    let mut worst = 0.0f64;
    for (sigma, tau, c, p) in cases {
        let params = ModelParams::new(1.0, 0.5, 1.0, p).map_err(|e| e.to_string())?;
        let ansatz = GaussianAnsatz::new(sigma, tau, c).map_err(|e| e.to_string())?;
        let closed = ansatz.energy(&params);
        let on_grid = edgpe::functionals::energy(&ansatz.field(Arc::clone(&grid)), &params).e;
        worst = worst.max((on_grid - closed).abs() / closed.abs());
    }
    if worst <= 1e-4 {
        Ok(format!("max relative gap {worst:.3e}"))
    } else {
        Err(format!("closed form vs grid gap {worst:.3e} > 1e-4"))
    }
}

fn verify_gn_inequality(cfg: &RunConfig) -> Check {
    let grid = Grid::new([12.0; 3], [24; 3]).map_err(|e| e.to_string())?;
    let mut fft = edgpe::fft::Fft3::new(Arc::clone(&grid));
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let u = edgpe::rng::smooth_random_field(&mut fft, cfg.seed ^ (1000 + seed), 1.0);
        let grad = edgpe::functionals::kinetic_quadratic_form(&u).sqrt();
        let ratio = u.lp_power(4.0) / (GN_C1.powi(4) * grad.powi(3) * u.mass().sqrt());
        worst = worst.max(ratio);
    }
    if worst <= 1.0 + 1e-6 {
        Ok(format!("max saturation {worst:.9}"))
    } else {
        Err(format!("inequality violated: saturation {worst}"))
    }
}

fn verify_mass_renormalization(cfg: &RunConfig) -> Check {
    let grid = Grid::new([12.0; 3], [16; 3]).map_err(|e| e.to_string())?;
    let mut fft = edgpe::fft::Fft3::new(Arc::clone(&grid));
    let mut u = edgpe::rng::smooth_random_field(&mut fft, cfg.seed ^ 77, 1.5);
    let c = 3.75;
    u.renormalize_mass(c).map_err(|e| e.to_string())?;
    let gap = (u.mass() - c).abs();
    if gap < 1e-12 * c {
        Ok(format!("|mass − c| = {gap:.3e}"))
    } else {
        Err(format!("renormalization off by {gap:.3e}"))
    }
}

fn verify_snapshot_roundtrip(cfg: &RunConfig) -> Check {
    let grid = Grid::new([8.0, 8.0, 12.0], [8, 8, 12]).map_err(|e| e.to_string())?;
    let mut fft = edgpe::fft::Fft3::new(Arc::clone(&grid));
    let u = edgpe::rng::smooth_random_field(&mut fft, cfg.seed ^ 5, 1.5);
    let v = edgpe::io::field_from_bytes(&field_to_bytes(&u)).map_err(|e| e.to_string())?;
    let same = u
        .data()
        .iter()
        .zip(v.data())
        .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
    if same && v.grid().n() == u.grid().n() {
        Ok("bitwise round trip".into())
    } else {
        Err("snapshot round trip altered the field".into())
    }
}

fn verify_free_propagator() -> Check {
    let grid = Grid::new([16.0; 3], [16; 3]).map_err(|e| e.to_string())?;
    let params = ModelParams {
        lambda1: 0.0,
        lambda2: 0.0,
        lambda3: 0.0,
        p: 5.0,
        trap: None,
    };
    let mut fft = edgpe::fft::Fft3::new(Arc::clone(&grid));
    let psi = edgpe::rng::smooth_random_field(&mut fft, 7, 2.0);
    let dt = 0.37;
    let stepped = strang_step(&psi, dt, &params).map_err(|e| e.to_string())?;
    let mut exact = psi.data().to_vec();
    fft.fft3(&mut exact);
    grid.for_each_mode(|idx, xi| {
        let q2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        exact[idx] *= num_complex::Complex64::from_polar(1.0, -0.5 * dt * q2);
    });
    fft.ifft3(&mut exact);
    let err: f64 = stepped
        .data()
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if err <= 1e-12 {
        Ok(format!("degenerate step matches e^(i dt Δ/2), err {err:.3e}"))
    } else {
        Err(format!("free-propagator error {err:.3e}"))
    }
}

fn verify_conservation_order() -> Check {
    let grid = Grid::new([12.0; 3], [24; 3]).map_err(|e| e.to_string())?;
    let params = ModelParams::new(1.0, 0.5, 1.0, 5.0).map_err(|e| e.to_string())?;
    let psi = GaussianAnsatz::new(1.4, 1.8, 2.0)
        .map_err(|e| e.to_string())?
        .field(Arc::clone(&grid));
    let drift = |dt: f64| -> std::result::Result<f64, String> {
        let config = edgpe::dynamics::PropagationConfig {
            dt,
            t_end: 0.4,
            snapshot_stride: (0.4 / dt) as usize,
            conserve_tol_energy: 1.0,
            ..Default::default()
        };
        let (_, trace, _) = propagate(&psi, &params, &config).map_err(|e| e.to_string())?;
        Ok(trace.max_energy_drift())
    };
    let ratio = drift(4e-3)? / drift(2e-3)?;
    if ratio >= 3.0 {
        Ok(format!("halving dt cuts energy drift {ratio:.2}x"))
    } else {
        Err(format!("drift ratio {ratio:.2} < 3"))
    }
}

fn verify_ground_state_smoke() -> Check {
    let params = ModelParams::new(0.0, 1.0, 1.0, 5.0).map_err(|e| e.to_string())?;
    let grid = Grid::new([12.0, 12.0, 24.0], [32, 32, 64]).map_err(|e| e.to_string())?;
    let config = edgpe::ground_state::SolverConfig {
        residual_tol: 1e-8,
        ..Default::default()
    };
    let (_, breakdown, chem, converged) =
        minimize_on_sphere(36.0978, &params, grid, &config).map_err(|e| e.to_string())?;
    if !converged {
        return Err("flow did not converge".into());
    }
    if breakdown.e >= -20.0 {
        return Err(format!("droplet energy {:.4} not deep enough", breakdown.e));
    }
    if chem.beta_pohozaev <= 0.0 {
        return Err(format!("beta {:.4} not positive", chem.beta_pohozaev));
    }
    if breakdown.q.abs() > 3e-2 * breakdown.a {
        return Err(format!(
            "virial |Q| = {:.3e} too large vs A = {:.3e}",
            breakdown.q.abs(),
            breakdown.a
        ));
    }
    Ok(format!(
        "droplet E = {:.6}, |Q|/A = {:.2e}, beta = {:.4}",
        breakdown.e,
        breakdown.q.abs() / breakdown.a,
        chem.beta_pohozaev
    ))
}
