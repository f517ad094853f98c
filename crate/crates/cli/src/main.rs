fn main() {
    std::process::exit(gbv_cli::run(std::env::args_os()));
}
