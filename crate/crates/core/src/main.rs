fn main() -> std::process::ExitCode {
    jetflow::cli::main_with_args(std::env::args_os())
}
