fn main() {
    std::process::exit(varcomp_cli::run_cli(std::env::args_os()));
}
