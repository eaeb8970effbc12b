fn main() {
    std::process::exit(bestpath::cli::run(std::env::args_os()));
}
