fn main() {
    std::process::exit(degradable::cli::run());
}
