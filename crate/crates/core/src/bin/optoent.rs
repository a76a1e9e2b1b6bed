use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(optoent_core::cli::main_with_args(std::env::args_os()))
}
