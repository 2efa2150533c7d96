fn main() {
    std::process::exit(bsbl_cli::run(std::env::args_os()));
}
