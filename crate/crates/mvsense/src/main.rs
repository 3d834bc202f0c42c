use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(mvsense::cli::run(std::env::args_os()))
}
