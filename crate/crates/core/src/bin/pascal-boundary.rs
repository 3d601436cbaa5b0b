fn main() {
    std::process::exit(pascal_boundary::cli::run(std::env::args_os()));
}
