fn main() {
    std::process::exit(gramtok::cli::main_with_args(std::env::args_os()));
}
