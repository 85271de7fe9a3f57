fn main() {
    std::process::exit(momenta::cli::run(std::env::args_os()));
}
