fn main() {
    std::process::exit(nonlocal_bbm_cli::run_cli(std::env::args_os()));
}
