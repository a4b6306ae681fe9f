fn main() {
    std::process::exit(dyadic_search::cli::main_with_args(std::env::args_os()));
}
