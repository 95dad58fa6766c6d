fn main() {
    std::process::exit(homobench_cli::run_command(std::env::args_os()));
}
