fn main() {
    std::process::exit(wdipln::cli::main_with_args(std::env::args().collect()));
}
