fn main() {
    std::process::exit(corrmmse::cli::main_with_args(std::env::args_os()));
}
