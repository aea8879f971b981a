fn main() {
    std::process::exit(pooltest::cli::main_with_args(std::env::args_os()));
}
