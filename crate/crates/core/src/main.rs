fn main() {
    std::process::exit(graphcx::cli::run(std::env::args_os()));
}
