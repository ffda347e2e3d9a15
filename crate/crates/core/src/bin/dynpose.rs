fn main() {
    std::process::exit(dynpose::cli::main_with_args(std::env::args_os()));
}
