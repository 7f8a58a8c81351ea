fn main() {
    std::process::exit(cuspflow_cli::main_with(std::env::args_os()));
}
