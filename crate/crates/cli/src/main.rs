use std::process::ExitCode;

fn main() -> ExitCode {
    safetynet_cli::main_with(std::env::args_os())
}
