fn main() {
    std::process::exit(coopruin::cli::run(std::env::args_os()));
}
