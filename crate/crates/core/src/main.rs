fn main() {
    std::process::exit(attend::cli::run(std::env::args_os()));
}
