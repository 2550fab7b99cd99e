use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use workcf::Variant;
use workcf_cli::{cmd_pw, cmd_sweep, cmd_verify, write_report, RunConfig};

#[derive(Parser)]
#[command(name = "workcf", version, about = "Ancilla-assisted measurement of the work characteristic function")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the u grid and write chi (undamped and damped) as CSV.
    Sweep(Common),
    /// Run the enabled checks; exit status 1 if any fails.
    Verify(Common),
    /// Write the two-point-measurement work distribution as CSV.
    Pw(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Fig2c,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Simple,
    General,
    Appendix,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Simple => Variant::Simple,
            VariantArg::General => Variant::General,
            VariantArg::Appendix => Variant::Appendix,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Output file; overrides `output_path` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fock-space cutoff override.
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(Preset::Fig2c)) => RunConfig::preset_fig2c(),
            (None, None) => bail!("give --config or --preset"),
        };
        if let Some(n) = self.cutoff {
            cfg.scenario = cfg.scenario.with_cutoff(n);
            cfg.scenario.validate()?;
        }
        if let Some(v) = self.variant {
            cfg.variant = v.into();
        }
        if let Some(out) = &self.out {
            cfg.output_path = Some(out.clone());
        }
        Ok(cfg)
    }
}

fn required_output(cfg: &RunConfig) -> Result<PathBuf> {
    match &cfg.output_path {
        Some(p) => Ok(p.clone()),
        None => bail!("no output file: pass --out or set output_path"),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let out = required_output(&cfg)?;
            let rows = cmd_sweep(&cfg, &out)?;
            eprintln!("wrote {rows} rows to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Pw(args) => {
            let cfg = args.resolve()?;
            let out = required_output(&cfg)?;
            let dist = cmd_pw(&cfg, &out)?;
            eprintln!("wrote {} work values to {}", dist.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let cfg = args.resolve()?;
            let report = cmd_verify(&cfg)?;
            print!("{}", report.to_text());
            if let Some(out) = &cfg.output_path {
                write_report(&report, out)?;
            } else {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
