use std::process::ExitCode;

fn main() -> ExitCode {
    flab::cli::main_with_args(std::env::args_os())
}
