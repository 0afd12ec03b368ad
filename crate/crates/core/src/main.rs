fn main() {
    std::process::exit(rliff::cli::run_cli(std::env::args_os()));
}
