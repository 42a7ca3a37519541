use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use orowan_cli::{run_experiment, ConfigError, RunConfig, Subcommand};

/// Environment override for the output directory. Sits between the config
/// file and command-line flags in precedence.
const OUTPUT_ENV: &str = "OROWAN_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "orowan", version, about = "Layer, corrector, hull, cell-problem and particle experiments")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set hull.delta=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write plot-ready CSVs.
    #[arg(long, global = true)]
    plot_data: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Subcommand)]
enum Cmd {
    /// Solve the layer profile and report c0.
    Layer,
    /// Solve the corrector at stress L.
    Corrector {
        #[arg(long = "L", allow_hyphen_values = true)]
        l: Option<String>,
    },
    /// Evaluate the hull ansatz and its residual over one period.
    Hull(HullArgs),
    /// Run one cell problem and estimate lambda.
    Cell {
        #[arg(long, allow_hyphen_values = true)]
        p: Option<String>,
        #[arg(long = "L", allow_hyphen_values = true)]
        l: Option<String>,
        #[arg(long = "T")]
        t: Option<String>,
    },
    /// Scan lambda/delta^2 against c0 |p0| L0 over the configured deltas.
    Orowan {
        #[arg(long, allow_hyphen_values = true)]
        p0: Option<String>,
        #[arg(long = "L0", allow_hyphen_values = true)]
        l0: Option<String>,
        #[arg(long)]
        deltas: Option<String>,
    },
    /// Integrate the particle system.
    Particles {
        #[arg(long = "N")]
        n: Option<String>,
        #[arg(long = "T")]
        t: Option<String>,
        #[arg(long)]
        dt: Option<String>,
    },
    /// Run the property suite and write verify.csv.
    Verify,
}

#[derive(Args)]
struct HullArgs {
    #[arg(long)]
    delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<String>,
    #[arg(long = "L", allow_hyphen_values = true)]
    l: Option<String>,
    #[arg(long)]
    n: Option<String>,
}

impl Cmd {
    fn split(self) -> (Subcommand, Vec<(&'static str, Option<String>)>) {
        match self {
            Cmd::Layer => (Subcommand::Layer, vec![]),
            Cmd::Corrector { l } => (Subcommand::Corrector, vec![("corrector.L", l)]),
            Cmd::Hull(a) => (
                Subcommand::Hull,
                vec![("hull.delta", a.delta), ("hull.p0", a.p0), ("hull.L", a.l), ("hull.n", a.n)],
            ),
            Cmd::Cell { p, l, t } => (Subcommand::Cell, vec![("cell.p", p), ("cell.L", l), ("cell.T", t)]),
            Cmd::Orowan { p0, l0, deltas } => (
                Subcommand::Orowan,
                vec![("cell.p0", p0), ("cell.L0", l0), ("cell.deltas", deltas)],
            ),
            Cmd::Particles { n, t, dt } => (
                Subcommand::Particles,
                vec![("particles.N", n), ("particles.T", t), ("particles.dt", dt)],
            ),
            Cmd::Verify => (Subcommand::Verify, vec![]),
        }
    }
}

fn build_config(cli: &Cli, flags: &[(&'static str, Option<String>)]) -> Result<RunConfig, ConfigError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?,
        None => String::new(),
    };
    let mut cfg = RunConfig::parse(&text)?;
    if let Ok(dir) = std::env::var(OUTPUT_ENV) {
        cfg.output_dir = dir.into();
    }
    for s in &cli.sets {
        let (k, v) = s.split_once('=').ok_or_else(|| ConfigError {
            line: None,
            message: format!("--set expects KEY=VALUE, got `{s}`"),
        })?;
        cfg.set(k.trim(), v.trim())?;
    }
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if cli.plot_data {
        cfg.emit_plot_data = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    let cmd = std::mem::replace(&mut cli.cmd, Cmd::Layer);
    let (sub, flags) = cmd.split();
    let cfg = match build_config(&cli, &flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg, sub) {
        Ok(report) => {
            print!("{}", report.summary);
            println!("wrote {} files to {}", report.files.len(), cfg.output_dir.display());
            if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &report.failures {
                    eprintln!("{f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
