fn main() {
    std::process::exit(bures_cli::main_with_args(std::env::args_os()));
}
