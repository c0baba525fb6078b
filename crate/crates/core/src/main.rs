fn main() {
    std::process::exit(nonlocal_spectral::cli::main_with_args(std::env::args_os()));
}
