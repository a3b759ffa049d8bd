fn main() -> std::process::ExitCode {
    keplerdrag::cli::main_with_args(std::env::args_os())
}
