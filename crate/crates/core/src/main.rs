fn main() {
    std::process::exit(cwb::cli::main_with_args(std::env::args_os()));
}
