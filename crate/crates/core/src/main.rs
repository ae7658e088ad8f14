fn main() {
    std::process::exit(polar_shape::cli::main_with_args(std::env::args_os()));
}
