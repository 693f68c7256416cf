fn main() {
    std::process::exit(tcgx::cli::run(std::env::args_os()));
}
