use std::process::ExitCode;

fn main() -> ExitCode {
    match mbsl::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mbsl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
