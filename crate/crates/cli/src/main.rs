mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AuditArgs, BuildArgs, EvalArgs, FiberArgs, RenderArgs, VerifyArgs};

#[derive(Parser, Debug)]
#[command(name = "fibermap", version, about = "Build, audit and render small-fiber maps")]
struct Cli {
    /// TOML file whose keys mirror the long flags; flags given on the
    /// command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a map and write its JSON bundle.
    Build(BuildArgs),
    /// Sample the surface and measure fiber volumes.
    Audit(AuditArgs),
    /// Draw the fibers of the planar tree map as SVG.
    RenderSvg(RenderArgs),
    /// Run one (or every) appendix property suite.
    VerifyAppendix(VerifyArgs),
    /// Evaluate a bundle's map at one point.
    Eval(EvalArgs),
    /// List the fiber components over one image point.
    Fiber(FiberArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let table = match cli.config.as_deref().map(config::load).transpose() {
        Ok(t) => t.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Build(a) => config::merge(a, &table).and_then(commands::build),
        Command::Audit(a) => config::merge(a, &table).and_then(commands::audit),
        Command::RenderSvg(a) => config::merge(a, &table).and_then(commands::render_svg),
        Command::VerifyAppendix(a) => config::merge(a, &table).and_then(commands::verify_appendix),
        Command::Eval(a) => config::merge(a, &table).and_then(commands::eval),
        Command::Fiber(a) => config::merge(a, &table).and_then(commands::fiber),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
