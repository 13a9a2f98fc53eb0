use std::process::ExitCode;

fn main() -> ExitCode {
    scloop::cli::main_with(std::env::args_os())
}
