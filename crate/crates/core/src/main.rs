fn main() {
    std::process::exit(leoids::cli::main_with_args(std::env::args_os()));
}
