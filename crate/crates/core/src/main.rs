use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use ebflow::app::{geometry_dump, parse_config, preset, run_case, SolverConfig};

#[derive(Parser)]
#[command(name = "ebflow", version, about = "Cut-cell flow solver on a staggered grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOptions {
    /// Override a config entry, e.g. `--set grid.n=[64,64,64]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Stop after this many steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Disable weighted state redistribution.
    #[arg(long)]
    no_wsrd: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the case described by a TOML file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Run a built-in case: agnesi, hemisphere, squareCylinder[:3|4|5].
    Preset {
        name: String,
        #[command(flatten)]
        opts: RunOptions,
        /// Print the resolved config instead of running.
        #[arg(long)]
        print: bool,
    },
    /// Write the geometry datasets and merge neighborhoods only.
    GeomDump {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn resolve(base: SolverConfig, opts: &RunOptions) -> anyhow::Result<SolverConfig> {
    let mut set = opts.set.clone();
    if let Some(n) = opts.steps {
        set.push(format!("run.max_steps={n}"));
    }
    if opts.no_wsrd {
        set.push("wsrd=false".into());
    }
    Ok(base.with_overrides(&set)?)
}

fn execute(cfg: &SolverConfig, opts: &RunOptions) -> anyhow::Result<()> {
    let out = run_case(cfg, Some(&opts.out)).with_context(|| format!("case `{}` failed", cfg.name))?;
    let mut text = Vec::new();
    out.summary.write(&mut text)?;
    print!("{}", String::from_utf8_lossy(&text));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, opts } => parse_config(&config)
            .map_err(anyhow::Error::from)
            .and_then(|c| resolve(c, &opts))
            .and_then(|c| execute(&c, &opts)),
        Command::Preset { name, opts, print } => preset(&name, &[]).map_err(anyhow::Error::from).and_then(|c| {
            let c = resolve(c, &opts)?;
            if print {
                print!("{}", c.to_toml()?);
                Ok(())
            } else {
                execute(&c, &opts)
            }
        }),
        Command::GeomDump { config, out } => parse_config(&config).map_err(anyhow::Error::from).and_then(|c| {
            for f in geometry_dump(&c, &out)? {
                println!("{}", f.display());
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
