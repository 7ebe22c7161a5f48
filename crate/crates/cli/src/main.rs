use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use nmor_cli::commands::{cmd_build_rom, cmd_eig, cmd_simulate, cmd_trim, describe_sim};
use nmor_cli::config::RunConfig;
use nmor_cli::registry::Registry;
use nmor_cli::sweep::{cmd_sweep, speedup_report};

#[derive(Parser)]
#[command(name = "nmor", version, about = "Trim, reduce and simulate aeroelastic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the equilibrium state.
    Trim(Common),
    /// Eigen-analysis of the trim Jacobian and mode selection.
    Eig(Common),
    /// Build a reduced model and write it to `<output_dir>/rom.nrom`.
    BuildRom(Common),
    /// Time-march the full and/or reduced model.
    Simulate(Common),
    /// Run a parameter sweep from the `[sweep]` table.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List the built-in models.
    Models,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Seed for stochastic gusts.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    modes_real: Option<usize>,
    #[arg(long)]
    modes_complex: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override any config key, e.g. `--set params.sigma=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut o = Vec::new();
        if let Some(d) = &self.output_dir {
            o.push(format!("output_dir=\"{}\"", d.display()));
        }
        if let Some(s) = self.seed {
            o.push(format!("gust.seed={s}"));
        }
        if let Some(v) = self.order {
            o.push(format!("rom.order={v}"));
        }
        if let Some(v) = self.modes_real {
            o.push(format!("basis.modes_real={v}"));
        }
        if let Some(v) = self.modes_complex {
            o.push(format!("basis.modes_complex={v}"));
        }
        if let Some(v) = self.epsilon {
            o.push(format!("rom.epsilon={v:e}"));
        }
        o.extend(self.overrides.iter().cloned());
        Ok(RunConfig::load(&self.config, &o)?)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Trim(c) => print!("{}", cmd_trim(c.load()?)?.summary),
        Command::Eig(c) => print!("{}", cmd_eig(c.load()?)?.summary),
        Command::BuildRom(c) => print!("{}", cmd_build_rom(c.load()?)?.summary),
        Command::Simulate(c) => print!("{}", describe_sim(&cmd_simulate(c.load()?)?)),
        Command::Sweep { common, jobs } => {
            let report = cmd_sweep(common.load()?, jobs)?;
            print!("{}", speedup_report(&report));
        }
        Command::Models => {
            for f in Registry::default().iter() {
                println!("{:<14} {}", f.name(), f.summary());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(nmor_cli::exit_code(&e) as u8)
        }
    }
}
