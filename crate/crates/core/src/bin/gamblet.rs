fn main() {
    std::process::exit(gamblet::cli::main_with_args(std::env::args_os()));
}
