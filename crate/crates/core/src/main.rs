fn main() {
    std::process::exit(reslab::cli::run());
}
