fn main() {
    std::process::exit(darkbanner::cli::run(std::env::args_os()));
}
