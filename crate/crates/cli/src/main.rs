use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lzsm::analysis::TfRule;
use lzsm::schedules::{Example1Params, Example2Params, ScheduleConfig, ScheduleParams};
use lzsm::ssh::ChainModel;
use lzsm::verify::Suite;
use lzsm_cli::config::{CliError, CliResult, Experiment, Resolution, RunConfig, SweepSpec};
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "lzsm", version, about = "Interference sweeps and verification for symmetric two-level and chain protocols")]
struct Cli {
    /// JSON run config, schedule config or chain model.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fixed number of integration steps.
    #[arg(long, global = true, conflicts_with = "tol")]
    steps: Option<usize>,
    /// Final-state tolerance for step doubling.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Where stage I ends.
    #[arg(long, global = true, value_enum)]
    tf_rule: Option<TfRuleArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TfRuleArg {
    Bottom,
    Recovery,
}

#[derive(Args, Debug, Default)]
struct SweepArg {
    /// Parameter name and `start:stop:count`.
    #[arg(long, num_args = 2, value_names = ["AXIS", "RANGE"], allow_hyphen_values = true)]
    sweep: Option<Vec<String>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sharp-minima schedule.
    Example1 {
        #[arg(long = "J0", allow_hyphen_values = true)]
        j0: Option<f64>,
        #[arg(long = "Jx", allow_hyphen_values = true)]
        jx: Option<f64>,
        #[arg(long = "Jy", allow_hyphen_values = true)]
        jy: Option<f64>,
        #[arg(long = "Jz", allow_hyphen_values = true)]
        jz: Option<f64>,
        #[arg(long = "T", allow_hyphen_values = true)]
        total_time: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
        #[command(flatten)]
        sweep: SweepArg,
    },
    /// Flat-band schedule along a tilted axis.
    Example2 {
        #[arg(long = "J-theta", allow_hyphen_values = true)]
        j_theta: Option<f64>,
        #[arg(long = "J-r", allow_hyphen_values = true)]
        j_r: Option<f64>,
        #[arg(long = "J-phi", allow_hyphen_values = true)]
        j_phi: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
        #[arg(long = "T0", allow_hyphen_values = true)]
        total_time: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
        #[command(flatten)]
        sweep: SweepArg,
    },
    /// Edge-to-edge transfer along a dimerized chain.
    Ssh {
        /// Chain length 2N.
        #[arg(long)]
        sites: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        w: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta0: Option<f64>,
        #[arg(long = "T", allow_hyphen_values = true)]
        total_time: Option<f64>,
        #[arg(long)]
        spectrum_points: Option<usize>,
        #[command(flatten)]
        sweep: SweepArg,
    },
    /// Sampled schedule read from `--config`.
    Custom {
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
        #[command(flatten)]
        sweep: SweepArg,
    },
    /// Runs a verification suite, or all of them when none is named.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Option<Suite>,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: lzsm::Error| e.to_string())
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

enum Loaded {
    Run(RunConfig),
    Schedule(ScheduleConfig),
    Chain(ChainModel),
}

fn load(path: &Path) -> CliResult<Loaded> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)?;
    if value.get("experiment").is_some() {
        Ok(Loaded::Run(serde_json::from_value(value)?))
    } else if value.get("n_cells").is_some() {
        Ok(Loaded::Chain(serde_json::from_value(value)?))
    } else {
        Ok(Loaded::Schedule(serde_json::from_value(value)?))
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn base_config(experiment: Experiment, loaded: Option<Loaded>) -> CliResult<RunConfig> {
    let mut cfg = RunConfig {
        experiment,
        schedule: None,
        chain: None,
        sweep: None,
        out: PathBuf::from("out"),
        resolution: Resolution::Default,
        threads: None,
        tf_rule: TfRule::default(),
        spectrum_points: 201,
    };
    match loaded {
        Some(Loaded::Run(run)) if run.experiment != experiment => {
            return Err(invalid(format!("config is for {}, not {experiment}", run.experiment)))
        }
        Some(Loaded::Run(run)) => cfg = run,
        Some(Loaded::Schedule(s)) => cfg.schedule = Some(s),
        Some(Loaded::Chain(c)) => cfg.chain = Some(c),
        None => {}
    }
    match experiment {
        Experiment::Example1 if cfg.schedule.is_none() => {
            cfg.schedule = Some(ScheduleConfig {
                params: ScheduleParams::Example1(Example1Params::default()),
                total_time: 2.0,
                tau: 0.0,
            })
        }
        Experiment::Example2 if cfg.schedule.is_none() => {
            cfg.schedule = Some(ScheduleConfig {
                params: ScheduleParams::Example2(Example2Params::default()),
                total_time: 1.26,
                tau: 0.0,
            })
        }
        Experiment::Ssh if cfg.chain.is_none() => cfg.chain = Some(ChainModel::reference(170.0)?),
        Experiment::Custom if cfg.schedule.is_none() => {
            return Err(invalid("custom needs --config with a schedule"))
        }
        _ => {}
    }
    Ok(cfg)
}

fn apply_sweep(cfg: &mut RunConfig, sweep: SweepArg) -> CliResult<()> {
    if let Some(v) = sweep.sweep {
        cfg.sweep = Some(SweepSpec::parse(&v[0], &v[1])?);
    }
    Ok(())
}

fn build_run_config(cli: Cli) -> CliResult<RunConfig> {
    let loaded = cli.config.as_deref().map(load).transpose()?;
    let experiment = match &cli.command {
        Command::Example1 { .. } => Experiment::Example1,
        Command::Example2 { .. } => Experiment::Example2,
        Command::Ssh { .. } => Experiment::Ssh,
        Command::Custom { .. } => Experiment::Custom,
        Command::Verify { .. } => unreachable!("handled separately"),
    };
    let mut cfg = base_config(experiment, loaded)?;
    match cli.command {
        Command::Example1 { j0, jx, jy, jz, total_time, tau, sweep } => {
            let s = cfg.schedule.as_mut().expect("set above");
            if let ScheduleParams::Example1(p) = &mut s.params {
                set(&mut p.j0, j0);
                set(&mut p.jx, jx);
                set(&mut p.jy, jy);
                set(&mut p.jz, jz);
            }
            set(&mut s.total_time, total_time);
            set(&mut s.tau, tau);
            apply_sweep(&mut cfg, sweep)?;
        }
        Command::Example2 { j_theta, j_r, j_phi, theta, phi, total_time, tau, sweep } => {
            let s = cfg.schedule.as_mut().expect("set above");
            if let ScheduleParams::Example2(p) = &mut s.params {
                set(&mut p.j_theta, j_theta);
                set(&mut p.j_r, j_r);
                set(&mut p.j_phi, j_phi);
                set(&mut p.theta, theta);
                set(&mut p.phi, phi);
            }
            set(&mut s.total_time, total_time);
            set(&mut s.tau, tau);
            apply_sweep(&mut cfg, sweep)?;
        }
        Command::Ssh { sites, w, v0, delta0, total_time, spectrum_points, sweep } => {
            let c = cfg.chain.as_mut().expect("set above");
            if let Some(n) = sites {
                if n % 2 != 0 || n < 4 {
                    return Err(invalid(format!("--sites must be even and ≥ 4, got {n}")));
                }
                c.n_cells = n / 2;
            }
            set(&mut c.w, w);
            set(&mut c.v0, v0);
            set(&mut c.delta0, delta0);
            set(&mut c.total_time, total_time);
            set(&mut cfg.spectrum_points, spectrum_points);
            apply_sweep(&mut cfg, sweep)?;
        }
        Command::Custom { tau, sweep } => {
            set(&mut cfg.schedule.as_mut().expect("set above").tau, tau);
            apply_sweep(&mut cfg, sweep)?;
        }
        Command::Verify { .. } => unreachable!("handled separately"),
    }
    set(&mut cfg.out, cli.out);
    if let Some(n) = cli.steps {
        cfg.resolution = Resolution::Steps(n);
    }
    if let Some(t) = cli.tol {
        cfg.resolution = Resolution::Tol(t);
    }
    cfg.threads = cli.threads.or(cfg.threads);
    match cli.tf_rule {
        Some(TfRuleArg::Bottom) => cfg.tf_rule = TfRule::DipBottom,
        Some(TfRuleArg::Recovery) => cfg.tf_rule = TfRule::default(),
        None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Returns whether every check passed.
fn run_verify(suite: Option<Suite>, config: Option<&Path>, out: Option<&Path>) -> CliResult<bool> {
    let schedule = match config.map(load).transpose()? {
        Some(Loaded::Schedule(s)) => Some(s),
        Some(Loaded::Run(r)) => r.schedule,
        Some(Loaded::Chain(_)) => return Err(invalid("verify targets a two-level schedule")),
        None => None,
    };
    let suites = suite.map_or_else(|| Suite::ALL.to_vec(), |s| vec![s]);
    let reports = suites
        .into_iter()
        .map(|s| lzsm_cli::verify(s, schedule.as_ref()))
        .collect::<CliResult<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let text = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])?
    } else {
        serde_json::to_string_pretty(&reports)?
    };
    println!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let name = suite.map_or_else(|| "verify.json".to_string(), |s| format!("verify_{s}.json"));
        fs::write(dir.join(name), text + "\n")?;
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { suite } => run_verify(suite, cli.config.as_deref(), cli.out.as_deref())
            .map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::from(1) }),
        _ => build_run_config(cli).and_then(|cfg| {
            let summary = lzsm_cli::run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(ExitCode::SUCCESS)
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code())
    })
}
