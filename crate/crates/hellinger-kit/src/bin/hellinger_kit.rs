fn main() {
    std::process::exit(hellinger_kit::cli::run(std::env::args_os()));
}
