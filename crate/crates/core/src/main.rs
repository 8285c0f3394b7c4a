fn main() {
    std::process::exit(fdqm::cli::run(std::env::args_os()));
}
