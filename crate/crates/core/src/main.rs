fn main() {
    std::process::exit(asr_core::cli::run_cli(std::env::args_os()));
}
