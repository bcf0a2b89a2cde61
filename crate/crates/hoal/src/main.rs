fn main() {
    std::process::exit(hoal::cli::run(std::env::args_os()));
}
