use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(nv_optics::cli::main_with_args(std::env::args_os()))
}
