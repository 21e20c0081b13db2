fn main() {
    std::process::exit(phasefront::cli::run(std::env::args_os()));
}
