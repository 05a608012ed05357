use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coopsense::baselines::Baseline;
use coopsense::harness::{
    brute_force_oracle, run_sweep, solve_auto, summarize, write_csv_atomic, Config, Scheme, SweepParam, SweepSpec,
};
use coopsense::polyblock::{solve_polyblock_with, PolyblockOptions};
use coopsense::{evaluate_timeline, validate_solution, Error, ProblemInstance, SolutionFile};

#[derive(Parser)]
#[command(
    name = "coopsense",
    version,
    about = "Mission-time minimization for cooperative multi-UAV sensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with the proposed scheme.
    Solve {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Write the solution JSON here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a parameter sweep and write the CSV.
    Sweep {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Swept parameter (overrides the config's sweep).
        #[arg(long)]
        param: Option<SweepParam>,
        /// Comma-separated values; defaults to the parameter's grid.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Comma-separated schemes; defaults to all.
        #[arg(long, value_delimiter = ',')]
        schemes: Option<Vec<Scheme>>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Solve one instance with a comparison scheme.
    Baseline {
        /// uta_wc, uta_c, full_c or opt_wc.
        name: Baseline,
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Validate a stored solution.
    Check { solution: PathBuf },
    /// Exhaustive search over a simplex grid.
    Oracle {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        grid_step: f64,
    },
    /// Polyblock iteration log as CSV.
    Trace {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named instance, e.g. paper-default.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    beta_s: Option<f64>,
    #[arg(long)]
    energy_budget: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    /// Fleet size with the default gain progression.
    #[arg(long)]
    num_uavs: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

impl InstanceArgs {
    fn resolve(&self) -> coopsense::Result<(Config, ProblemInstance)> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(p) = &self.preset {
            cfg.preset = Some(p.clone());
            cfg.instance = None;
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        cfg.validate()?;
        let mut inst = cfg.instance()?;
        if let Some(m) = self.num_uavs {
            inst = inst.with_gamma(ProblemInstance::default_gains(m))?;
        }
        if let Some(v) = self.beta_s {
            inst = inst.with_beta_s(v)?;
        }
        if let Some(v) = self.energy_budget {
            inst = inst.with_energy_budget(v)?;
        }
        if let Some(v) = self.p_max {
            inst = inst.with_p_max(v)?;
        }
        Ok((cfg, inst))
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Infeasible(_) => 2,
        Error::NotConverged { .. } | Error::MaxIterations { .. } => 3,
        _ => 1,
    }
}

fn emit(text: &str, output: Option<&Path>) -> coopsense::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn emit_solution(
    instance: ProblemInstance,
    report: coopsense::SolveReport,
    output: Option<&Path>,
) -> coopsense::Result<()> {
    let file = SolutionFile { instance, report };
    emit(&serde_json::to_string_pretty(&file)?, output)
}

fn run(cli: Cli) -> coopsense::Result<ExitCode> {
    match cli.command {
        Command::Solve { inst, output } => {
            let (cfg, inst) = inst.resolve()?;
            let report = solve_auto(&inst, cfg.epsilon)?;
            let failed = report.diagnostics.iter().any(|d| !d.passed);
            for d in report.diagnostics.iter().filter(|d| !d.passed) {
                eprintln!("diagnostic failed: {} (residual {:e})", d.name, d.residual);
            }
            emit_solution(inst, report, output.as_deref())?;
            Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Baseline { name, inst, output } => {
            let (_, inst) = inst.resolve()?;
            let report = name.solve(&inst)?;
            emit_solution(inst, report, output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            inst,
            param,
            values,
            schemes,
            output,
        } => {
            let (cfg, base) = inst.resolve()?;
            let mut spec = match (param, &cfg.sweep) {
                (Some(p), _) => SweepSpec::default_grid(p),
                (None, Some(s)) => s.clone(),
                (None, None) => {
                    return Err(Error::Config(
                        "sweep needs --param or a config with a sweep section".into(),
                    ))
                }
            };
            if let Some(v) = values {
                spec.values = v;
            }
            if let Some(s) = schemes {
                spec.schemes = s;
            }
            let out = run_sweep(&spec, &base, cfg.epsilon)?;
            write_csv_atomic(&out.rows, &output)?;
            eprint!("{}", summarize(&out.rows));
            for f in &out.failures {
                eprintln!("{}={} {}: {}", spec.param, f.value, f.scheme, f.error);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { solution } => {
            let text = std::fs::read_to_string(&solution)?;
            let file: SolutionFile = serde_json::from_str(&text)?;
            let r = &file.report;
            let mut violations = validate_solution(&file.instance, &r.allocation, &r.plan);
            let timeline = evaluate_timeline(&file.instance, &r.allocation, &r.plan)?;
            let drift = timeline.total_t - r.total_t();
            if drift.abs() > 1e-9 * (1.0 + timeline.total_t) {
                violations.push(coopsense::Violation {
                    constraint: "reported_total_time".into(),
                    uav: None,
                    residual: drift,
                });
            }
            for v in &violations {
                match v.uav {
                    Some(m) => println!("{} (UAV {m}): residual {:e}", v.constraint, v.residual),
                    None => println!("{}: residual {:e}", v.constraint, v.residual),
                }
            }
            if violations.is_empty() {
                println!("ok: T = {}", timeline.total_t);
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Oracle { inst, grid_step } => {
            let (_, inst) = inst.resolve()?;
            let best = brute_force_oracle(&inst, grid_step)?;
            emit(&serde_json::to_string_pretty(&best)?, None)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace { inst, output } => {
            let (cfg, inst) = inst.resolve()?;
            let opts = PolyblockOptions {
                epsilon: cfg.epsilon,
                ..Default::default()
            };
            let (_, trace) = solve_polyblock_with(&inst, &opts)?;
            let mut buf = Vec::new();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(["iteration", "cbv", "lower_bound", "vertices"])?;
                for r in &trace.records {
                    w.write_record([
                        r.iteration.to_string(),
                        r.cbv.to_string(),
                        r.lower_bound.to_string(),
                        r.vertices.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            let text = String::from_utf8(buf).expect("CSV output is UTF-8");
            emit(text.trim_end(), output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if let Error::NotConverged { best, .. } = &err {
                eprintln!(
                    "best allocation found: {:?} (T = {})",
                    best.allocation.omega(),
                    best.total_t()
                );
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
