fn main() {
    std::process::exit(hcm_cli::run_cli(std::env::args_os()));
}
