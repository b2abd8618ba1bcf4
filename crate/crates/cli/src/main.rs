fn main() {
    std::process::exit(cuspsteklov_cli::run(std::env::args_os()));
}
