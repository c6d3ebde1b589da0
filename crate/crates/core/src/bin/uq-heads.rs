fn main() {
    std::process::exit(uq_heads::cli::dispatch(std::env::args_os()));
}
