use std::io::{self, BufReader};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;

use clap::{Args, Parser, Subcommand};
use vinculum_cli::commands::{self, CheckArgs};
use vinculum_cli::{serve, Server, KERNEL_STACK};
use vinculum_core::DEFAULT_FUEL;

#[derive(Parser)]
#[command(name = "vinculum", version, about = "Check, format and serve proof documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay every proof and report which theorems are complete.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Print a machine-readable report on stdout.
        #[arg(long)]
        json: bool,
        /// β-reduction budget per normalisation.
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Treat unification variables left unresolved by a finished proof as incomplete.
        #[arg(long)]
        strict_unused_unifvars: bool,
    },
    /// Rewrite documents in canonical form.
    Fmt {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Speak the session protocol.
    Serve(ServeArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ServeArgs {
    /// Serve a single session over stdin and stdout.
    #[arg(long)]
    stdio: bool,
    /// Listen on 127.0.0.1 at this port (0 picks a free one).
    #[arg(long, value_name = "PORT")]
    listen: Option<u16>,
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Check { paths, json, fuel, strict_unused_unifvars } => {
            let args = CheckArgs { paths, json, fuel, strict_unused_unifvars };
            commands::check(&args, &mut io::stdout().lock(), &mut io::stderr().lock())
        }
        Command::Fmt { paths } => commands::fmt(&paths, &mut io::stderr().lock()),
        Command::Serve(ServeArgs { stdio: true, .. }) => {
            let mut server = Server::default();
            match serve(&mut io::stdin().lock(), &mut io::stdout().lock(), &mut server) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("serve: {e}");
                    2
                }
            }
        }
        Command::Serve(ServeArgs { listen, .. }) => listen_on(listen.unwrap_or(0)),
    }
}

fn listen_on(port: u16) -> i32 {
    let listener = match TcpListener::bind(("127.0.0.1", port)) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("listen: {e}");
            return 2;
        }
    };
    if let Ok(addr) = listener.local_addr() {
        eprintln!("listening on {addr}");
    }
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept: {e}");
                continue;
            }
        };
        let spawned = thread::Builder::new().stack_size(KERNEL_STACK).spawn(move || {
            let mut reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(_) => return,
            };
            let mut writer = stream;
            let _ = serve(&mut reader, &mut writer, &mut Server::default());
        });
        if let Err(e) = spawned {
            eprintln!("spawn: {e}");
        }
    }
    0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = thread::Builder::new().stack_size(KERNEL_STACK).spawn(move || run(cli)).expect("spawn kernel thread").join().unwrap_or(2);
    ExitCode::from(code as u8)
}
