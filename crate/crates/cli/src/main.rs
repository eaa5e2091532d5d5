use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csforest_cli::{cmd_audit, cmd_compare, cmd_generate, cmd_run, CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "csforest",
    version,
    about = "Conformalized semi-supervised forests: experiments and audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write train/test CSV files for each repetition.
    Generate(Common),
    /// Run every configured method and write sets, reports and a manifest.
    Run(Common),
    /// Strange-set audit sweep; exits with 3 if any bound is violated.
    Audit(Common),
    /// Aggregate report files into a mean ± sd table.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(short, long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in config: example1, upscaled or shift.
    #[arg(long)]
    preset: Option<String>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Audit only: seeds per class size.
    #[arg(long)]
    audit_seeds: Option<usize>,
}

impl Common {
    fn load(&self, required: bool) -> CliResult<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) if !required => ExperimentConfig::preset("example1")?,
            (None, None) => return Err(CliError::Usage("either --config or --preset is required".into())),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.repetitions {
            cfg.repetitions = r;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(s) = self.audit_seeds {
            cfg.audit.seeds = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out(&self, cfg: &ExperimentConfig) -> PathBuf {
        cfg.output_dir(self.output_dir.as_deref())
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(c) => {
            let cfg = c.load(true)?;
            for p in cmd_generate(&cfg, &c.out(&cfg))? {
                println!("{}", p.display());
            }
        }
        Command::Run(c) => {
            let cfg = c.load(true)?;
            let out = cmd_run(&cfg, &c.out(&cfg))?;
            let files: Vec<PathBuf> = out
                .reports
                .iter()
                .map(|(rep, label, _)| c.out(&cfg).join(format!("rep{rep}/{label}_report.json")))
                .collect();
            print!("{}", cmd_compare(&files)?);
            println!("manifest: {}", display(&out.manifest));
        }
        Command::Audit(c) => {
            let cfg = c.load(false)?;
            let out = c.out(&cfg);
            let summary = cmd_audit(&cfg.audit, cfg.seed, Some(&out))?;
            println!(
                "{} audits, {} violation(s); log: {}",
                summary.entries.len(),
                summary.violations,
                display(&out.join("audit_log.csv"))
            );
            if summary.violations > 0 {
                return Err(CliError::AuditViolation {
                    violations: summary.violations,
                });
            }
        }
        Command::Compare { reports } => print!("{}", cmd_compare(&reports)?),
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
