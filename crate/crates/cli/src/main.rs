use clap::Parser;
use tracing_subscriber::EnvFilter;

use crossmodal_cli::{run_offline, serve, Cli, Command};

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Serve(args) => tokio::runtime::Runtime::new()?.block_on(serve(args)),
        other => {
            print!("{}", run_offline(other)?);
            Ok(())
        }
    }
}
