use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qosc_cli::run(std::env::args_os()))
}
