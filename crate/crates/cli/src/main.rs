fn main() {
    std::process::exit(tepidx_cli::main_with(std::env::args_os()));
}
