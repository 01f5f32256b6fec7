fn main() {
    std::process::exit(zebraheart::cli::run(std::env::args_os()));
}
