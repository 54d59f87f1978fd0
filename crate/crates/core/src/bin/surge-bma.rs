fn main() -> std::process::ExitCode {
    surge_bma::cli::main_from_args(std::env::args_os())
}
