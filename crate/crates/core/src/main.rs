fn main() {
    std::process::exit(molgen::cli::run(std::env::args_os()));
}
