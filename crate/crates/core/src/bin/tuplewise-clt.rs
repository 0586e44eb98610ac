fn main() {
    std::process::exit(tuplewise_clt::cli::dispatch(std::env::args_os()));
}
