fn main() {
    std::process::exit(interchange_core::cli::run(std::env::args_os()));
}
