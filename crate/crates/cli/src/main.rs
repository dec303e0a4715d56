fn main() {
    std::process::exit(adiabat_cli::main_with_args(std::env::args_os()));
}
