fn main() {
    std::process::exit(coarsedim::cli::run(std::env::args_os()));
}
