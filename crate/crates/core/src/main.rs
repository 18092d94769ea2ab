fn main() {
    std::process::exit(mdiqss::cli::main_with_args(std::env::args_os()));
}
