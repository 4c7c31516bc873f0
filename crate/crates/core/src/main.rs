fn main() {
    std::process::exit(robustq::cli::run());
}
