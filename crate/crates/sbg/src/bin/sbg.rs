fn main() {
    std::process::exit(sbg::cli::run(std::env::args()));
}
