fn main() {
    std::process::exit(gnlab::cli::run_command(std::env::args_os()));
}
