use std::process::ExitCode;

fn main() -> ExitCode {
    lexforge::cli::run()
}
