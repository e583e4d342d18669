fn main() {
    std::process::exit(noma_core::cli::run(std::env::args_os()));
}
