fn main() {
    std::process::exit(netkin_core::cli::main_with_args(std::env::args_os()));
}
