//! The `cwb` command line, built inside this package so the acceptance
//! suite can spawn it as a separate process.

fn main() {
    std::process::exit(cwb::cli::main_with_args(std::env::args_os()));
}
