fn main() {
    std::process::exit(ebts_cli::run(std::env::args_os()));
}
