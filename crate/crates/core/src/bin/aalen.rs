fn main() {
    std::process::exit(aalen_core::cli::run(std::env::args_os()));
}
