fn main() {
    std::process::exit(qlm_cli::run(std::env::args_os()));
}
