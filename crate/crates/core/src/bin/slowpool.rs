fn main() {
    std::process::exit(slowpool::cli::run(std::env::args_os()));
}
