fn main() {
    std::process::exit(ritz_dbn::cli::main_with_args(std::env::args_os()));
}
