fn main() {
    std::process::exit(fitness::cli::execute(std::env::args_os()));
}
