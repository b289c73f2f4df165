fn main() {
    std::process::exit(shrinker::cli::run(std::env::args_os()));
}
