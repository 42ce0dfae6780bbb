fn main() {
    std::process::exit(mlvsbm::cli::run(std::env::args_os()));
}
