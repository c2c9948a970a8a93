fn main() {
    std::process::exit(suborbit::cli::run(std::env::args_os()));
}
