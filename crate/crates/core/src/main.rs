fn main() {
    std::process::exit(olim::cli::main_with_args(std::env::args_os()));
}
