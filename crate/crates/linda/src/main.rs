fn main() {
    std::process::exit(linda::cli::main_with(std::env::args_os()));
}
