use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use skinbath_cli::sweep::overall_exit_code;
use skinbath_cli::{
    execute, load_overrides, preset, reproduce, resolve_out_dir, sweep, CliError, Command, Format, ScenarioConfig,
    PRESET_IDS,
};

#[derive(Parser)]
#[command(name = "skinbath", version, about = "Emitters coupled to a Hatano-Nelson lattice")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Scenario config (JSON); a run manifest is accepted too.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps and presets.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,

    /// Accepted for scripting; no computation uses random numbers.
    #[arg(long, global = true)]
    seedless: bool,

    /// Output format, overriding `outputs.formats`.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum RunArg {
    Simulate,
    Spectrum,
    Selfenergy,
    Boundstate,
    Dfi,
    Hyperbolic,
}

impl From<RunArg> for Command {
    fn from(r: RunArg) -> Self {
        match r {
            RunArg::Simulate => Command::Simulate,
            RunArg::Spectrum => Command::Spectrum,
            RunArg::Selfenergy => Command::Selfenergy,
            RunArg::Boundstate => Command::Boundstate,
            RunArg::Dfi => Command::Dfi,
            RunArg::Hyperbolic => Command::Hyperbolic,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Time evolution from a single excited emitter.
    Simulate,
    /// Periodic and open-boundary lattice spectra.
    Spectrum,
    /// Self-energy matrix over a detuning grid.
    Selfenergy,
    /// Hidden bound state by inverse iteration.
    Boundstate,
    /// Decoherence-free interaction report for a braided pair.
    Dfi,
    /// Pseudosphere samples and curved-space site coordinates.
    Hyperbolic,
    /// Runs one command per override set (a JSON array of pointer/value objects).
    Sweep {
        #[arg(long)]
        overrides: PathBuf,
        #[arg(long, value_enum, default_value = "simulate")]
        run: RunArg,
    },
    /// Regenerates a figure family from a built-in preset.
    Reproduce { id: String },
    /// Lists the built-in presets.
    Presets,
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    ScenarioConfig::from_path(path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("skinbath: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let format = cli.format.map(|f| match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    });
    let single = match cli.command {
        Cmd::Simulate => Some(Command::Simulate),
        Cmd::Spectrum => Some(Command::Spectrum),
        Cmd::Selfenergy => Some(Command::Selfenergy),
        Cmd::Boundstate => Some(Command::Boundstate),
        Cmd::Dfi => Some(Command::Dfi),
        Cmd::Hyperbolic => Some(Command::Hyperbolic),
        _ => None,
    };
    if let Some(command) = single {
        let cfg = load_config(cli)?;
        let dir = resolve_out_dir(cli.out.as_deref(), Some(&cfg));
        let report = execute(command, &cfg, &dir, format)?;
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        println!("{}: wrote {} files to {}", command.name(), report.files.len(), dir.display());
        return Ok(0);
    }
    match &cli.command {
        Cmd::Sweep { overrides, run } => {
            let cfg = load_config(cli)?;
            let list = load_overrides(overrides)?;
            let dir = resolve_out_dir(cli.out.as_deref(), Some(&cfg));
            let entries = sweep(Command::from(*run), &cfg, &list, &dir, cli.parallel, format)?;
            report_entries(&entries, &dir);
            Ok(overall_exit_code(&entries))
        }
        Cmd::Reproduce { id } => {
            let p = preset(id).ok_or_else(|| {
                CliError::Config(format!("unknown preset {id:?}; available: {}", PRESET_IDS.join(", ")))
            })?;
            let dir = match &cli.out {
                Some(d) => d.clone(),
                None => resolve_out_dir(None, None).join(p.id),
            };
            let entries = reproduce(&p, &dir, cli.parallel, format)?;
            report_entries(&entries, &dir);
            Ok(overall_exit_code(&entries))
        }
        Cmd::Presets => {
            for id in PRESET_IDS {
                let p = preset(id).expect("listed preset exists");
                println!("{id:6} {} ({} runs)", p.description, p.runs.len());
            }
            Ok(0)
        }
        _ => unreachable!("single-run commands handled above"),
    }
}

fn report_entries(entries: &[skinbath_cli::IndexEntry], dir: &std::path::Path) {
    for e in entries {
        match &e.error {
            None => println!("{:16} ok", e.name),
            Some(err) => println!("{:16} failed (exit {}): {err}", e.name, e.exit_code),
        }
    }
    println!("index written to {}", dir.join("index.json").display());
}
