fn main() {
    std::process::exit(platonic::cli::run(std::env::args_os()));
}
