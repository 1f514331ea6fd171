fn main() {
    std::process::exit(lambeam::cli::run());
}
