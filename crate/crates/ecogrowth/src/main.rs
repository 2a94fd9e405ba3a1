use std::process::ExitCode;

fn main() -> ExitCode {
    let code = ecogrowth::cli::run_cli(std::env::args_os().skip(1));
    ExitCode::from(code as u8)
}
