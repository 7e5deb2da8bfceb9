fn main() {
    std::process::exit(triload_cli::run_from_args(std::env::args_os()));
}
