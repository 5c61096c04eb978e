fn main() {
    std::process::exit(v2vkey::cli::run(std::env::args_os()));
}
