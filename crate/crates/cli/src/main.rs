use std::process::ExitCode;

fn main() -> ExitCode {
    credigraph_cli::run()
}
