use clap::{Args, Parser, Subcommand};
use solitonlab::catalog::EntryParams;
use solitonlab::scenario::{
    catalog_rows, run, write_catalog_table, CatalogFilter, CatalogRef, Parameters, Resolution, RunOptions, Scenario,
    SolitonRef, Task,
};
use solitonlab::Error;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "solitonlab", version, about = "Numerical audits for gradient rho-Einstein solitons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Built-in catalog.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
    /// Run every applicable audit on a catalog entry with default parameters.
    Verify {
        id: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Output directory (overrides SOLITONLAB_OUT and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run independent tasks concurrently.
    #[arg(long)]
    parallel: bool,
    #[arg(long, default_value = "default", value_parser = ["low", "default", "high"])]
    resolution: String,
}

impl RunArgs {
    fn options(&self) -> Result<RunOptions, Error> {
        Ok(RunOptions {
            out_dir: self.out.clone(),
            parallel: self.parallel,
            resolution: self.resolution.parse::<Resolution>()?,
        })
    }
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// List entries with parameters and exactness tags.
    List {
        #[arg(long, conflicts_with = "schouten")]
        exact: bool,
        #[arg(long)]
        schouten: bool,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

fn execute(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { config, run: args } => {
            let sc = Scenario::load(&config)?;
            run_and_print(&sc, &args.options()?)
        }
        Command::Verify { id, run: args } => {
            EntryParams::default_for(&id)?;
            let sc = Scenario {
                schema: solitonlab::scenario::SCHEMA_VERSION,
                name: format!("verify-{id}"),
                soliton: SolitonRef::Catalog(CatalogRef {
                    catalog: id,
                    params: None,
                }),
                tasks: Task::ALL.to_vec(),
                parameters: Parameters::default(),
                output: None,
            };
            sc.validate()?;
            run_and_print(&sc, &args.options()?)
        }
        Command::Catalog {
            command: CatalogCommand::List { exact, schouten, json },
        } => {
            let filter = if exact {
                CatalogFilter::Exact
            } else if schouten {
                CatalogFilter::Schouten
            } else {
                CatalogFilter::All
            };
            let rows = catalog_rows(filter)?;
            let mut out = std::io::stdout().lock();
            if json {
                let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))?;
                writeln!(out, "{text}")?;
            } else {
                write_catalog_table(&rows, out)?;
            }
            Ok(0)
        }
    }
}

fn run_and_print(sc: &Scenario, opts: &RunOptions) -> Result<u8, Error> {
    let outcome = run(sc, opts)?;
    let mut out = std::io::stdout().lock();
    write!(out, "{}", outcome.report.summary_table())?;
    writeln!(out, "report written to {}", outcome.out_dir.join("report.json").display())?;
    Ok(outcome.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e @ Error::UnknownCatalogEntry(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Error::Io(msg)) if msg.contains("Broken pipe") => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
