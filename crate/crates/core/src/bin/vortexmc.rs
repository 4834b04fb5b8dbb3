fn main() {
    std::process::exit(vortexmc::cli::main_with_args(std::env::args_os()));
}
