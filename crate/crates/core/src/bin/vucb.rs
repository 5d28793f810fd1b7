fn main() {
    std::process::exit(vucb::harness::cli::dispatch(std::env::args_os()));
}
