mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gasketflow::export::{
    coordinates_csv, energy_profile_csv, function_csv, masses_csv, trajectory_csv, GraphExport,
};
use gasketflow::flow::{boundary_optimality_residuals, weak_form_residual, BackwardEuler};
use gasketflow::verify::{all_passed, run_suite, Report, Suite, SuiteOptions, DEFAULT_SEED};
use gasketflow::{energy_profile, eval_wb, harmonic_function, normal_derivative, poisson_solve};
use serde::Serialize;

use config::{load, EvolveConfig, PoissonConfig, Setting};

#[derive(Parser)]
#[command(
    name = "gasketflow",
    version,
    about = "Robin heat flows on Sierpinski gasket graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the level-m graph as JSON and its vertex coordinates as CSV.
    Gasket {
        #[arg(long = "n", short = 'N', value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        #[arg(long, short)]
        m: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the backward-Euler flow described by a config file.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed of random initial data.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the solver tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Solve the Robin Poisson problem described by a config file.
    Poisson {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run a property suite; exits 0 iff no violations were found.
    Verify {
        suite: SuiteArg,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Report file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solver tolerance of the flow suite.
        #[arg(long)]
        tol: Option<f64>,
        /// Samples (pairs for the flow suite) instead of the suite default.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Dump the harmonic function with given corner values and its energy profile.
    Extend {
        #[arg(long = "n", short = 'N', value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        #[arg(long, short)]
        m: u32,
        /// Corner values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        boundary: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Scalar,
    Energy,
    Wb,
    Locality,
    Flow,
    All,
}

impl SuiteArg {
    fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::Scalar => vec![Suite::Scalar],
            SuiteArg::Energy => vec![Suite::Energy],
            SuiteArg::Wb => vec![Suite::Wb],
            SuiteArg::Locality => vec![Suite::Locality],
            SuiteArg::Flow => vec![Suite::Flow],
            SuiteArg::All => Suite::ALL.to_vec(),
        }
    }
}

/// Written next to every run's outputs. Timings are the only field that
/// varies between identical runs.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: serde_json::Value,
    versions: BTreeMap<&'static str, &'static str>,
    seed: Option<u64>,
    outputs: Vec<String>,
    timings_seconds: BTreeMap<String, f64>,
}

struct Run {
    out: PathBuf,
    manifest: RunManifest,
    clock: Instant,
}

impl Run {
    fn start(command: &str, out: &Path, config: impl Serialize, seed: Option<u64>) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let mut versions = BTreeMap::new();
        versions.insert("gasketflow-cli", env!("CARGO_PKG_VERSION"));
        versions.insert("gasketflow", gasketflow::VERSION);
        Ok(Self {
            out: out.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                config: serde_json::to_value(config)?,
                versions,
                seed,
                outputs: Vec::new(),
                timings_seconds: BTreeMap::new(),
            },
            clock: Instant::now(),
        })
    }

    fn lap(&mut self, phase: &str) {
        self.manifest
            .timings_seconds
            .insert(phase.to_string(), self.clock.elapsed().as_secs_f64());
        self.clock = Instant::now();
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.lap("write");
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        let path = self.out.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn json(value: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn cmd_gasket(n: usize, m: u32, out: &Path) -> Result<()> {
    let mut run = Run::start("gasket", out, serde_json::json!({"N": n, "m": m}), None)?;
    let graph = gasketflow::build_level(n, m)?;
    run.lap("build");
    run.write("graph.json", &json(&GraphExport::new(&graph))?)?;
    run.write("coordinates.csv", &coordinates_csv(&graph))?;
    run.finish()
}

fn cmd_evolve(path: &Path, out: &Path, seed: Option<u64>, tol: Option<f64>) -> Result<()> {
    let mut cfg: EvolveConfig = load(path)?;
    cfg.u0 = cfg.u0.with_seed(seed);
    if let Some(tol) = tol {
        cfg.tol = tol;
    }
    let flow = cfg
        .flow()
        .with_context(|| format!("{}: invalid flow parameters", path.display()))?;
    let mut run = Run::start("evolve", out, &cfg, cfg.u0.seed())?;
    let setting = Setting::new(cfg.n, cfg.m, cfg.weights.as_ref(), &cfg.spec)?;
    let u0 = cfg.u0.realize(setting.graph())?;
    run.lap("setup");
    let stepper = BackwardEuler::new(&setting.form, &setting.measure, &cfg.spec, flow.tau)?;
    let traj = stepper.run(&u0, &flow).map_err(|e| {
        anyhow::anyhow!(
            "{e} (after {} completed steps, last solver residual {:?})",
            e.partial.diagnostics.len(),
            e.partial.diagnostics.last().map(|d| d.residual)
        )
    })?;
    run.lap("evolve");

    let mut observables = String::from("time,energy,sup_norm,mean\n");
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let e = eval_wb(&setting.form, &cfg.spec, u)?;
        let mean = setting.measure.mean(u)?;
        observables.push_str(&format!("{t},{e},{},{mean}\n", u.sup_norm()));
    }
    run.write("trajectory.csv", &trajectory_csv(&traj))?;
    run.write("observables.csv", &observables)?;
    run.write("diagnostics.json", &json(&traj.diagnostics)?)?;
    run.write("masses.csv", &masses_csv(&setting.measure))?;
    run.finish()
}

#[derive(Serialize)]
struct PoissonReport {
    iterations: usize,
    solver_residual: f64,
    /// Largest residual of the weak form over all vertex test functions.
    weak_form_residual: f64,
    /// Distance of `mu(p_i) f(p_i) - 2 ND_i` to the subdifferential of `B_i`.
    boundary_residuals: Vec<f64>,
    normal_derivatives: Vec<f64>,
    boundary_values: Vec<f64>,
}

fn cmd_poisson(path: &Path, out: &Path, seed: Option<u64>, tol: Option<f64>) -> Result<()> {
    let mut cfg: PoissonConfig = load(path)?;
    cfg.f = cfg.f.with_seed(seed);
    if let Some(tol) = tol {
        cfg.tol = tol;
    }
    let mut run = Run::start("poisson", out, &cfg, cfg.f.seed())?;
    let setting = Setting::new(cfg.n, cfg.m, cfg.weights.as_ref(), &cfg.spec)?;
    let f = cfg.f.realize(setting.graph())?;
    run.lap("setup");
    let (form, measure, spec) = (&setting.form, &setting.measure, &cfg.spec);
    let sol = poisson_solve(
        form,
        measure,
        spec,
        &f,
        cfg.tol,
        cfg.max_iters.unwrap_or(100_000),
    )?;
    run.lap("solve");
    let graph = setting.graph();
    let report = PoissonReport {
        iterations: sol.iterations,
        solver_residual: sol.residual,
        weak_form_residual: weak_form_residual(form, measure, spec, &sol.u, &f)?,
        boundary_residuals: boundary_optimality_residuals(form, measure, spec, &sol.u, &f)?,
        normal_derivatives: (0..graph.n())
            .map(|i| normal_derivative(form, &sol.u, i))
            .collect::<gasketflow::Result<_>>()?,
        boundary_values: graph
            .boundary()
            .iter()
            .map(|&b| sol.u.values()[b])
            .collect(),
    };
    run.write("solution.csv", &function_csv(&sol.u))?;
    run.write("report.json", &json(&report)?)?;
    run.finish()
}

fn cmd_verify(
    suite: SuiteArg,
    seed: u64,
    out: Option<&Path>,
    tol: Option<f64>,
    samples: Option<usize>,
) -> Result<bool> {
    let opts = SuiteOptions { samples, tol };
    let mut reports: Vec<Report> = Vec::new();
    for s in suite.suites() {
        let clock = Instant::now();
        let mut part = run_suite(s, seed, &opts)?;
        for r in &mut part {
            r.property = format!("{}/{}", s.name(), r.property);
        }
        eprintln!(
            "{:<9} {} properties, {} violations, {:.2}s",
            s.name(),
            part.len(),
            part.iter().map(|r| r.violations).sum::<usize>(),
            clock.elapsed().as_secs_f64()
        );
        reports.extend(part);
    }
    let text = json(&reports)?;
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    for r in reports.iter().filter(|r| !r.passed()) {
        eprintln!(
            "violated: {} ({} of {} samples)",
            r.property, r.violations, r.samples
        );
    }
    Ok(all_passed(&reports))
}

fn cmd_extend(n: usize, m: u32, boundary: &[f64], out: &Path) -> Result<()> {
    let config = serde_json::json!({"N": n, "m": m, "boundary": boundary});
    let mut run = Run::start("extend", out, config, None)?;
    let graph = gasketflow::build_level(n, m)?;
    let u = harmonic_function(&graph, boundary)?;
    run.lap("extend");
    run.write("harmonic.csv", &function_csv(&u))?;
    run.write("coordinates.csv", &coordinates_csv(&graph))?;
    run.write(
        "energy_profile.csv",
        &energy_profile_csv(&energy_profile(&graph, &u)?),
    )?;
    run.finish()
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GASKETFLOW_THREADS") {
        let threads: usize = v
            .parse()
            .with_context(|| format!("GASKETFLOW_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| match cli.command {
        Command::Gasket { n, m, out } => cmd_gasket(n as usize, m, &out).map(|_| true),
        Command::Evolve {
            config,
            out,
            seed,
            tol,
        } => cmd_evolve(&config, &out, seed, tol).map(|_| true),
        Command::Poisson {
            config,
            out,
            seed,
            tol,
        } => cmd_poisson(&config, &out, seed, tol).map(|_| true),
        Command::Verify {
            suite,
            seed,
            out,
            tol,
            samples,
        } => cmd_verify(suite, seed, out.as_deref(), tol, samples),
        Command::Extend {
            n,
            m,
            boundary,
            out,
        } => cmd_extend(n as usize, m, &boundary, &out).map(|_| true),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
