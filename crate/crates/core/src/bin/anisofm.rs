fn main() {
    std::process::exit(anisofm::experiments::cli_main(std::env::args_os()));
}
