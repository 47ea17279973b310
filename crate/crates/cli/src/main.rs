fn main() {
    std::process::exit(tvrls_cli::main_with(std::env::args_os()));
}
