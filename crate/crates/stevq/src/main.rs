fn main() {
    std::process::exit(stevq::cli::run(std::env::args_os()));
}
