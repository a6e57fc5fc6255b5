fn main() {
    std::process::exit(disco::cli_io::run_cli(std::env::args()));
}
