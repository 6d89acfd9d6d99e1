fn main() {
    std::process::exit(evoeq::cli::run(std::env::args_os()));
}
