fn main() {
    std::process::exit(wgqed::cli::main_with_args(std::env::args_os()));
}
