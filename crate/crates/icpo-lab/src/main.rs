fn main() {
    std::process::exit(icpo_lab::cli::run());
}
