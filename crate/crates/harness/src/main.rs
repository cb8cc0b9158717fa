fn main() {
    std::process::exit(hybs_harness::cli::run(std::env::args_os()));
}
