fn main() {
    std::process::exit(pyjama::cli::run(std::env::args_os()));
}
