fn main() {
    std::process::exit(ftc_core::harness::cli_main(std::env::args_os()));
}
