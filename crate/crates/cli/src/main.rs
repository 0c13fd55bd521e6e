use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use elicit_cli::{execute, server, Cli, Command, Exit};
use elicit_core::session::{Api, SessionStore};

fn serve(addr: std::net::SocketAddr, dir: Option<std::path::PathBuf>) -> anyhow::Result<()> {
    let store = match dir {
        Some(d) => SessionStore::persistent(d)?,
        None => SessionStore::in_memory(),
    };
    let api = Api::new(Arc::new(store));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(server::serve(addr, api))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Serve { addr, dir } = cli.command {
        return match serve(addr, dir) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(Exit::UserError.code())
            }
        };
    }
    match execute(&cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth a panic
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stdout.flush();
            eprint!("{}", out.stderr);
            ExitCode::from(out.exit.code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Exit::UserError.code())
        }
    }
}
