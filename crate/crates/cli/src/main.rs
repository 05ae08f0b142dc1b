use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phasebeam_core::alphabet::PhaseAlphabet;
use phasebeam_core::bisection::{bisection_solve, BisectionParams};
use phasebeam_core::coupling::CouplingMatrices;
use phasebeam_core::exhaustive::{brute_force_ratio, ExhaustiveSolver};
use phasebeam_core::fractional::{assemble_bisection_qubo, build_fractional_coefficients};
use phasebeam_core::harness::{output_dir_for, pretty_json, run_experiment, run_sweep, RunConfig, SweepFile};
use phasebeam_core::sa::EarlyStop;
use phasebeam_core::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "phasebeam", version, about = "Discrete-phase beamforming for planar antenna arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report, patterns and plots.
    Solve(Overrides),
    /// Run a sweep file and write the aggregated CSV.
    Sweep {
        /// Sweep files (TOML with `mode` and `[[runs]]`); modes must agree.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_early_stop)]
        early_stop: Option<EarlyStop>,
        #[arg(long, value_parser = parse_phases)]
        phases: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force the best discrete weights of a tiny array and compare
    /// with exhaustive bisection.
    Oracle(Overrides),
    /// Write the bisection QUBO at one or more trial values in triplet form.
    ExportQubo {
        #[command(flatten)]
        overrides: Overrides,
        /// Trial ratio values; defaults to the first bisection trial.
        #[arg(long = "t")]
        t: Vec<f64>,
    },
}

#[derive(Args, Clone)]
struct Overrides {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_early_stop)]
    early_stop: Option<EarlyStop>,
    #[arg(long, value_parser = parse_phases)]
    phases: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_early_stop(s: &str) -> std::result::Result<EarlyStop, String> {
    match s {
        "off" | "c1" | "c1c2" => s.parse().map_err(|e: Error| e.to_string()),
        _ => Err(format!("expected one of off, c1, c1c2; got `{s}`")),
    }
}

fn parse_phases(s: &str) -> std::result::Result<usize, String> {
    match s {
        "2" => Ok(2),
        "4" => Ok(4),
        _ => Err(format!("expected 2 or 4, got `{s}`")),
    }
}

fn apply(config: &mut RunConfig, seed: Option<u64>, early_stop: Option<EarlyStop>, phases: Option<usize>, out: Option<&Path>) -> Result<()> {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(e) = early_stop {
        config.solver.sa.early_stop = e;
    }
    if let Some(k) = phases {
        config.phases = k;
    }
    if let Some(o) = out {
        config.output_dir = o.to_path_buf();
    }
    config.validate()
}

impl Overrides {
    fn load(&self) -> Result<RunConfig> {
        let mut config = RunConfig::load(&self.config)?;
        apply(&mut config, self.seed, self.early_stop, self.phases, self.out.as_deref())?;
        Ok(config)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.to_path_buf(), source: e })?;
    }
    fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn solve(o: &Overrides) -> Result<()> {
    let config = o.load()?;
    let report = run_experiment(&config)?;
    let m = &report.methods;
    let summary = json!({
        "run_id": report.run_id,
        "output": output_dir_for(&config),
        "t_star": report.t_star,
        "lambda_max": report.lambda_max,
        "t_updates": report.t_updates,
        "bits_explored": report.bits_explored,
        "max_gain_db": {
            "continuous": m.continuous.max_gain_db,
            "discrete": m.discrete.max_gain_db,
            "quantized": m.quantized.max_gain_db,
        },
        "wall_time_s": report.wall_time_s,
    });
    print!("{}", pretty_json(&summary));
    Ok(())
}

fn sweep(
    configs: &[PathBuf],
    seed: Option<u64>,
    early_stop: Option<EarlyStop>,
    phases: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let files = configs.iter().map(|p| SweepFile::load(p)).collect::<Result<Vec<_>>>()?;
    let mut plan = SweepFile::merge(files)?;
    for run in &mut plan.runs {
        apply(run, seed, early_stop, phases, out)?;
    }
    let result = run_sweep(&plan.runs, plan.mode)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| plan.runs[0].output_dir.clone());
    let path = dir.join(format!("sweep_{}.csv", plan.mode.name()));
    write_file(&path, &result.csv)?;
    print!("{}", result.csv);
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn oracle(o: &Overrides) -> Result<()> {
    let config = o.load()?;
    let geometry = config.geometry()?;
    let matrices = CouplingMatrices::build(&geometry, &config.region()?, &config.coupling)?;
    let alphabet = PhaseAlphabet::with_phase_count(config.phases)?;
    let best = brute_force_ratio(&matrices.a, &matrices.b, &alphabet).map_err(|e| Error::Config(e.to_string()))?;
    let bisect = bisection_solve(&matrices.a, &matrices.b, &alphabet, &mut ExhaustiveSolver, &config.bisection_params())?;
    let phases_deg: Vec<f64> = best.weights.iter().map(|z| z.arg().to_degrees().rem_euclid(360.0).round()).collect();
    let summary = json!({
        "elements": geometry.len(),
        "phases": config.phases,
        "configurations": best.configurations,
        "max_ratio": best.ratio,
        "best_phases_deg": phases_deg,
        "bisection_t_star": bisect.t_star,
        "bisection_t_updates": bisect.t_updates(),
        "agree": (best.ratio - bisect.t_star).abs() < 2.0 * config.solver.tol,
    });
    print!("{}", pretty_json(&summary));
    Ok(())
}

fn export_qubo(o: &Overrides, ts: &[f64]) -> Result<()> {
    let config = o.load()?;
    config.check_memory()?;
    let geometry = config.geometry()?;
    let matrices = CouplingMatrices::build(&geometry, &config.region()?, &config.coupling)?;
    let alphabet = PhaseAlphabet::with_phase_count(config.phases)?;
    let coeffs = build_fractional_coefficients(&matrices.a, &matrices.b, &alphabet)?;
    let ts = if ts.is_empty() {
        let b = BisectionParams::default();
        vec![b.alpha * b.t0 + (1.0 - b.alpha) * b.t1]
    } else {
        ts.to_vec()
    };
    let dir = output_dir_for(&config);
    for t in ts {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Config(format!("trial value {t} outside [0, 1]")));
        }
        let qubo = assemble_bisection_qubo(&coeffs, t);
        let path = dir.join(format!("qubo_t{t:.6}.txt"));
        write_file(&path, &qubo.to_triplet_string())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(o) => solve(o),
        Command::Sweep {
            configs,
            seed,
            early_stop,
            phases,
            out,
        } => sweep(configs, *seed, *early_stop, *phases, out.as_deref()),
        Command::Oracle(o) => oracle(o),
        Command::ExportQubo { overrides, t } => export_qubo(overrides, t),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
