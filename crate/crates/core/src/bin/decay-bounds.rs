fn main() {
    std::process::exit(decay_bounds::cli::main_with_args(std::env::args_os()));
}
