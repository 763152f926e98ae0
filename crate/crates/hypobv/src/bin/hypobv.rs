use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(hypobv::cli::main_entry().clamp(0, 255) as u8)
}
