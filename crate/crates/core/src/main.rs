fn main() {
    std::process::exit(sophlab::cli::run(std::env::args_os()));
}
