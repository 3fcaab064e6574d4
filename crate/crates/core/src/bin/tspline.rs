use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(tspline::cli::run(std::env::args_os()))
}
