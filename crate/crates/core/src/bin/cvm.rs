fn main() {
    std::process::exit(cvm::cli::run(std::env::args_os()));
}
