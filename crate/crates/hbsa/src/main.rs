fn main() {
    std::process::exit(hbsa::cli::run());
}
