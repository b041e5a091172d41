fn main() {
    std::process::exit(steklov::cli::dispatch(std::env::args_os()));
}
