fn main() {
    std::process::exit(upccd::cli::run(std::env::args_os()));
}
