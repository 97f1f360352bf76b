use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(heralded_cavity::cli::run(std::env::args_os()))
}
