fn main() {
    std::process::exit(gridsurge::cli::run_cli(std::env::args_os()));
}
