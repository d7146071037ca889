fn main() {
    std::process::exit(sdfdc_cli::run(std::env::args_os()));
}
