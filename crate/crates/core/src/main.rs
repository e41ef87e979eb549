fn main() {
    std::process::exit(fracdense::cli::main_with_args(std::env::args_os()));
}
