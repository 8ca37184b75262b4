fn main() {
    std::process::exit(crystalcert::cli::run_cli(std::env::args_os()));
}
