fn main() {
    std::process::exit(hexaperiod::cli::main_with_args(std::env::args_os()));
}
