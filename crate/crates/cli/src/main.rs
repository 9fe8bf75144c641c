use clap::Parser;
use rayleigh_cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; bad arguments are configuration errors
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("rayleigh: {e}");
        std::process::exit(e.exit_code());
    }
}
