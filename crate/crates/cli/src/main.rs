fn main() {
    std::process::exit(laconv_cli::run(std::env::args_os()));
}
