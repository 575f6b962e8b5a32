fn main() {
    std::process::exit(gpc_cli::main_with_args(std::env::args_os()));
}
