fn main() -> std::process::ExitCode {
    fibtrace::cli::run_from(std::env::args_os())
}
