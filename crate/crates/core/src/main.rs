fn main() {
    std::process::exit(relu_overlap::cli::main_with_args(std::env::args_os()));
}
